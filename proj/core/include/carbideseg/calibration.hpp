#pragma once

#include <cstdint>
#include <vector>

#include "carbideseg/image.hpp"
#include "carbideseg/rng.hpp"
#include "carbideseg/tensor.hpp"

namespace carbideseg {

struct CalibrationModel {
    double temperature = 1.0;
    int iterations = 0;
    double nll_before = 0.0;
    double nll_after = 0.0;
    bool converged = false;
};

struct ReliabilityDiagram {
    int bins = 10;
    std::vector<double> bin_lo, bin_hi;
    std::vector<double> mean_pred;       // per-bin mean predicted probability
    std::vector<double> observed;        // per-bin positive frequency
    std::vector<std::int64_t> count;
    double ece = 0.0;                    // count-weighted |mean_pred - observed|
};

// p = sigmoid(z / T), elementwise; stable for large |z|.
std::vector<float> apply_temperature(const std::vector<float>& logits, double temperature);

// Mean binary cross-entropy of sigmoid(z/T) against binary targets,
// computed in log-space; optionally emits the analytic d(nll)/dT.
double nll(const std::vector<float>& logits, const std::vector<std::uint8_t>& targets,
           double temperature, double* d_temperature = nullptr);

// Minimizes the validation NLL over log T (T > 0 by construction) with
// L-BFGS from T = 1. Diverging temperatures are capped at 1000 and flagged.
CalibrationModel fit_temperature(const std::vector<float>& logits,
                                 const std::vector<std::uint8_t>& targets);

ReliabilityDiagram reliability(const std::vector<float>& probs,
                               const std::vector<std::uint8_t>& targets, int bins = 10);

// Per-pixel confidence max(p, 1-p) plus the tri-level quantization
// (low < 0.7 <= medium < 0.9 <= high).
struct ConfidenceMap {
    Image2D confidence;
    std::vector<std::uint8_t> level;  // 0 low, 1 medium, 2 high
    double threshold_medium = 0.7;
    double threshold_high = 0.9;
};

ConfidenceMap confidence_map(const Image2D& probs);

// Monte-Carlo Dice loss for mean-variance estimation: draws S logit fields
// z_s = mu + exp(log_var/2) * eps_s and averages dice_loss(sigmoid(z_s), y).
double mve_mc_dice_loss(const net::Tensor4<float>& mean_logits,
                        const net::Tensor4<float>& log_variance,
                        const net::Tensor4<float>& targets, int samples, Rng& rng,
                        double dice_eps = 1e-6);

} // namespace carbideseg
