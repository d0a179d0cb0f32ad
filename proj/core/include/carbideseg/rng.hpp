#pragma once

#include <cmath>
#include <cstdint>

namespace carbideseg {

// Deterministic PRNG with hand-rolled distributions so that sampled values
// do not depend on the standard library implementation. splitmix64 core.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        return next_u64() % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal via Box-Muller, one value per call (the pair's second
    // half is cached)
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // Independent child stream; distinct salts give decorrelated streams.
    Rng fork(std::uint64_t salt) {
        std::uint64_t z = state_ ^ (0x6a09e667f3bcc909ULL + salt * 0x3c6ef372fe94f82bULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        return Rng(z ^ (z >> 27));
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace carbideseg
