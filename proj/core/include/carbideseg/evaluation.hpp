#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "carbideseg/image.hpp"

namespace carbideseg {

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::int64_t total() const { return tp + fp + fn + tn; }
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& target);

// 2TP/(2TP+FP+FN); 1.0 when both masks are empty.
double dice_coefficient(const ConfusionCounts& c);

struct DiceSummary {
    std::vector<double> values;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

// Median and quartiles by linear interpolation between order statistics.
DiceSummary summarize(const std::vector<double>& dices);

struct WilcoxonResult {
    std::size_t n_effective = 0;   // after zero-difference removal
    double w_plus = 0.0;
    double w_minus = 0.0;
    double w = 0.0;                // min(w_plus, w_minus)
    double p_value = 1.0;          // two-sided
    std::string method;            // "exact" | "normal"
    double alpha = 0.001;
    bool reject = false;
};

// Paired signed-rank test. Zero differences are dropped (Wilcoxon's
// convention), absolute differences get average ranks under ties. Exact
// two-sided p by enumerating all 2^n sign assignments for n <= exact_cutoff,
// normal approximation with tie-corrected variance and continuity
// correction above. Throws when every difference is zero.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b,
                                    double alpha = 0.001,
                                    std::size_t exact_cutoff = 25);

struct ComparisonReport {
    DiceSummary summary_a;
    DiceSummary summary_b;
    WilcoxonResult wilcoxon;
    bool degenerate = false;  // all paired differences were zero
    std::string note;
};

ComparisonReport compare_methods(const std::vector<double>& dices_a,
                                 const std::vector<double>& dices_b,
                                 double alpha = 0.001);

void write_paired_csv(const std::vector<double>& dices_a,
                      const std::vector<double>& dices_b, const std::string& path);

struct ComponentStats {
    std::int64_t area_px = 0;
    double area_nm2 = 0.0;
    double ecd_nm = 0.0;  // equivalent circle diameter, 2*sqrt(A/pi)
};

struct Morphometrics {
    std::vector<ComponentStats> components;
    std::int64_t component_count = 0;
    double number_density_per_nm2 = 0.0;
    double ecd_bin_width_nm = 50.0;
    std::vector<std::int64_t> ecd_histogram;  // bin i covers [i*w, (i+1)*w)
    std::int64_t large_count = 0;             // ECD >= large_threshold_nm
    double large_threshold_nm = 500.0;
};

Morphometrics morphometrics(const BinaryMask& mask, double pixel_size_nm,
                            double ecd_bin_width_nm = 50.0,
                            double large_threshold_nm = 500.0);

} // namespace carbideseg
