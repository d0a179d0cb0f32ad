#include "carbideseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "carbideseg/classical.hpp"

namespace carbideseg {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& target) {
    if (pred.width != target.width || pred.height != target.height)
        throw std::invalid_argument("confusion: dimension mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.data[i] != 0, t = target.data[i] != 0;
        c.tp += (p && t);
        c.fp += (p && !t);
        c.fn += (!p && t);
        c.tn += (!p && !t);
    }
    return c;
}

double dice_coefficient(const ConfusionCounts& c) {
    const std::int64_t den = 2 * c.tp + c.fp + c.fn;
    if (den == 0) return 1.0;  // both masks empty: perfect agreement
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

namespace {

// quantile by linear interpolation between order statistics of sorted v
double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

} // namespace

DiceSummary summarize(const std::vector<double>& dices) {
    if (dices.empty()) throw std::invalid_argument("summarize: empty list");
    DiceSummary s;
    s.values = dices;
    std::vector<double> sorted = dices;
    std::sort(sorted.begin(), sorted.end());
    s.median = quantile_sorted(sorted, 0.5);
    s.q1 = quantile_sorted(sorted, 0.25);
    s.q3 = quantile_sorted(sorted, 0.75);
    return s;
}

ComparisonReport compare_methods(const std::vector<double>& dices_a,
                                 const std::vector<double>& dices_b, double alpha) {
    ComparisonReport r;
    r.summary_a = summarize(dices_a);
    r.summary_b = summarize(dices_b);
    try {
        r.wilcoxon = wilcoxon_signed_rank(dices_a, dices_b, alpha);
    } catch (const std::invalid_argument& e) {
        r.degenerate = true;
        r.note = e.what();
        r.wilcoxon.alpha = alpha;
    }
    return r;
}

void write_paired_csv(const std::vector<double>& dices_a,
                      const std::vector<double>& dices_b, const std::string& path) {
    if (dices_a.size() != dices_b.size())
        throw std::invalid_argument("write_paired_csv: length mismatch");
    std::filesystem::path tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream os(tmp);
        os << "tile,dice_a,dice_b,difference\n";
        for (std::size_t i = 0; i < dices_a.size(); ++i)
            os << i << ',' << dices_a[i] << ',' << dices_b[i] << ','
               << dices_a[i] - dices_b[i] << '\n';
    }
    std::filesystem::rename(tmp, path);
}

Morphometrics morphometrics(const BinaryMask& mask, double pixel_size_nm,
                            double ecd_bin_width_nm, double large_threshold_nm) {
    if (pixel_size_nm <= 0.0)
        throw std::invalid_argument("morphometrics: pixel size must be positive");
    if (ecd_bin_width_nm <= 0.0)
        throw std::invalid_argument("morphometrics: bin width must be positive");

    LabelMap lm = label_components(mask, 8);
    Morphometrics m;
    m.component_count = lm.num_components;
    m.ecd_bin_width_nm = ecd_bin_width_nm;
    m.large_threshold_nm = large_threshold_nm;

    std::vector<std::int64_t> area(lm.num_components + 1, 0);
    for (auto l : lm.data) area[l]++;

    const double px_area = pixel_size_nm * pixel_size_nm;
    for (std::int32_t l = 1; l <= lm.num_components; ++l) {
        ComponentStats cs;
        cs.area_px = area[l];
        cs.area_nm2 = static_cast<double>(area[l]) * px_area;
        cs.ecd_nm = 2.0 * std::sqrt(cs.area_nm2 / M_PI);
        if (cs.ecd_nm >= large_threshold_nm) ++m.large_count;
        auto bin = static_cast<std::size_t>(cs.ecd_nm / ecd_bin_width_nm);
        if (m.ecd_histogram.size() <= bin) m.ecd_histogram.resize(bin + 1, 0);
        m.ecd_histogram[bin]++;
        m.components.push_back(cs);
    }
    const double field_area = static_cast<double>(mask.width) * mask.height * px_area;
    m.number_density_per_nm2 =
        field_area > 0.0 ? static_cast<double>(lm.num_components) / field_area : 0.0;
    return m;
}

} // namespace carbideseg
