#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "carbideseg/unet.hpp"

namespace carbideseg::net {

// Bias-corrected Adam over every trainable tensor of a ParameterStore.
template <typename T>
class Adam {
public:
    explicit Adam(T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8))
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    long step_count() const { return t_; }

    void step(ParameterStore<T>& params, T lr) {
        ++t_;
        const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(t_));
        const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(t_));
        for (auto& e : params.entries) {
            if (!e.trainable) continue;
            auto& m = moments_m_[e.name];
            auto& v = moments_v_[e.name];
            if (m.empty()) {
                m.assign(e.value.size(), T(0));
                v.assign(e.value.size(), T(0));
            }
            for (std::size_t i = 0; i < e.value.size(); ++i) {
                const T g = e.grad.data[i];
                if (!std::isfinite(g))
                    throw std::runtime_error("Adam: non-finite gradient in " + e.name +
                                             " at step " + std::to_string(t_));
                m[i] = beta1_ * m[i] + (T(1) - beta1_) * g;
                v[i] = beta2_ * v[i] + (T(1) - beta2_) * g * g;
                const T m_hat = m[i] / bc1;
                const T v_hat = v[i] / bc2;
                e.value.data[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
            }
        }
    }

private:
    T beta1_, beta2_, eps_;
    long t_ = 0;
    std::unordered_map<std::string, std::vector<T>> moments_m_, moments_v_;
};

} // namespace carbideseg::net
