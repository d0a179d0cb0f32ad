#include "carbideseg/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "carbideseg/lbfgs.hpp"
#include "carbideseg/training.hpp"

namespace carbideseg {

namespace {

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid_d(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

std::vector<float> apply_temperature(const std::vector<float>& logits, double temperature) {
    if (temperature <= 0.0)
        throw std::invalid_argument("apply_temperature: temperature must be positive");
    std::vector<float> out(logits.size());
    const double inv_t = 1.0 / temperature;
    for (std::size_t i = 0; i < logits.size(); ++i)
        out[i] = static_cast<float>(sigmoid_d(logits[i] * inv_t));
    return out;
}

double nll(const std::vector<float>& logits, const std::vector<std::uint8_t>& targets,
           double temperature, double* d_temperature) {
    if (logits.empty() || logits.size() != targets.size())
        throw std::invalid_argument("nll: empty input or size mismatch");
    if (temperature <= 0.0)
        throw std::invalid_argument("nll: temperature must be positive");
    const double inv_t = 1.0 / temperature;
    double loss = 0.0, dldt = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double u = logits[i] * inv_t;
        loss += targets[i] ? softplus(-u) : softplus(u);
        if (d_temperature) {
            const double y = targets[i] ? 1.0 : 0.0;
            dldt += (sigmoid_d(u) - y) * (-logits[i] * inv_t * inv_t);
        }
    }
    const double n = static_cast<double>(logits.size());
    if (d_temperature) *d_temperature = dldt / n;
    return loss / n;
}

CalibrationModel fit_temperature(const std::vector<float>& logits,
                                 const std::vector<std::uint8_t>& targets) {
    if (logits.empty() || logits.size() != targets.size())
        throw std::invalid_argument("fit_temperature: empty input or size mismatch");
    bool has_pos = false, has_neg = false;
    for (auto t : targets) (t ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw std::invalid_argument("fit_temperature: validation targets are single-class");

    CalibrationModel model;
    model.nll_before = nll(logits, targets, 1.0);

    // optimize over log T so positivity needs no constraint
    auto objective = [&](const std::vector<double>& x, std::vector<double>& grad) {
        const double t = std::exp(x[0]);
        double dldt = 0.0;
        const double f = nll(logits, targets, t, &dldt);
        grad[0] = dldt * t;  // chain rule through T = exp(x)
        return f;
    };

    LbfgsOptions opts;
    opts.max_iterations = 100;
    LbfgsResult res = lbfgs_minimize(objective, {0.0}, opts);

    double t = std::exp(res.x[0]);
    model.iterations = res.iterations;
    model.converged = res.converged;
    if (t > 1000.0) {  // labels carry no signal, NLL decreases toward T=inf
        t = 1000.0;
        model.converged = false;
    }
    model.temperature = t;
    model.nll_after = nll(logits, targets, t);
    return model;
}

ReliabilityDiagram reliability(const std::vector<float>& probs,
                               const std::vector<std::uint8_t>& targets, int bins) {
    if (probs.empty() || probs.size() != targets.size())
        throw std::invalid_argument("reliability: empty input or size mismatch");
    if (bins < 2) throw std::invalid_argument("reliability: bins must be >= 2");

    ReliabilityDiagram d;
    d.bins = bins;
    d.bin_lo.resize(bins);
    d.bin_hi.resize(bins);
    d.mean_pred.assign(bins, 0.0);
    d.observed.assign(bins, 0.0);
    d.count.assign(bins, 0);
    for (int b = 0; b < bins; ++b) {
        d.bin_lo[b] = static_cast<double>(b) / bins;
        d.bin_hi[b] = static_cast<double>(b + 1) / bins;
    }
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("reliability: probability outside [0,1]");
        int b = std::min(bins - 1, static_cast<int>(p * bins));  // last bin right-closed
        d.mean_pred[b] += p;
        d.observed[b] += targets[i] ? 1.0 : 0.0;
        d.count[b]++;
    }
    const double total = static_cast<double>(probs.size());
    for (int b = 0; b < bins; ++b) {
        if (d.count[b] == 0) continue;
        d.mean_pred[b] /= static_cast<double>(d.count[b]);
        d.observed[b] /= static_cast<double>(d.count[b]);
        d.ece += (static_cast<double>(d.count[b]) / total) *
                 std::abs(d.mean_pred[b] - d.observed[b]);
    }
    return d;
}

ConfidenceMap confidence_map(const Image2D& probs) {
    ConfidenceMap m;
    m.confidence = Image2D(probs.width, probs.height);
    m.confidence.pixel_size_nm = probs.pixel_size_nm;
    m.level.resize(probs.data.size());
    for (std::size_t i = 0; i < probs.data.size(); ++i) {
        const float p = probs.data[i];
        const float c = std::max(p, 1.0f - p);
        m.confidence.data[i] = c;
        m.level[i] = c >= m.threshold_high ? 2 : (c >= m.threshold_medium ? 1 : 0);
    }
    return m;
}

double mve_mc_dice_loss(const net::Tensor4<float>& mean_logits,
                        const net::Tensor4<float>& log_variance,
                        const net::Tensor4<float>& targets, int samples, Rng& rng,
                        double dice_eps) {
    net::check_same_shape(mean_logits, log_variance, "mve_mc_dice_loss");
    net::check_same_shape(mean_logits, targets, "mve_mc_dice_loss");
    if (samples < 1)
        throw std::invalid_argument("mve_mc_dice_loss: samples must be >= 1");
    for (float lv : log_variance.data)
        if (!std::isfinite(lv))
            throw std::invalid_argument("mve_mc_dice_loss: non-finite log variance");

    net::Tensor4<float> probs(mean_logits.n, mean_logits.c, mean_logits.h, mean_logits.w);
    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < probs.data.size(); ++i) {
            const double sd = std::exp(0.5 * log_variance.data[i]);
            const double z = mean_logits.data[i] + sd * rng.normal();
            probs.data[i] = static_cast<float>(sigmoid_d(z));
        }
        acc += static_cast<double>(
            dice_loss(probs, targets, static_cast<float>(dice_eps)));
    }
    return acc / samples;
}

} // namespace carbideseg
