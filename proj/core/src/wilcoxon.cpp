#include "carbideseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace carbideseg {

namespace {

// Average ranks of |d| with tie handling; returned doubled so every rank is
// an exact integer.
std::vector<long> doubled_ranks(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return abs_d[i] < abs_d[j]; });
    std::vector<long> r2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
        // ranks i+1..j+1 tie; average rank = (i+j+2)/2, doubled = i+j+2
        const long doubled_avg = static_cast<long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) r2[order[k]] = doubled_avg;
        i = j + 1;
    }
    return r2;
}

// Exact null distribution of the doubled W+ statistic over all 2^n sign
// assignments, by convolution over ranks (identical to full enumeration).
std::vector<double> exact_distribution(const std::vector<long>& r2) {
    long maxsum = std::accumulate(r2.begin(), r2.end(), 0L);
    std::vector<double> count(static_cast<std::size_t>(maxsum) + 1, 0.0);
    count[0] = 1.0;
    long cur = 0;
    for (long r : r2) {
        for (long w = cur; w >= 0; --w)
            if (count[w] != 0.0) count[w + r] += count[w];
        cur += r;
    }
    return count;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b, double alpha,
                                    std::size_t exact_cutoff) {
    if (a.size() != b.size())
        throw std::invalid_argument("wilcoxon_signed_rank: length mismatch");
    if (a.size() < 2)
        throw std::invalid_argument("wilcoxon_signed_rank: need at least 2 pairs");

    std::vector<double> abs_d;
    std::vector<int> sign;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0.0) continue;  // zero differences are dropped
        abs_d.push_back(std::abs(d));
        sign.push_back(d > 0.0 ? 1 : -1);
    }
    if (abs_d.empty())
        throw std::invalid_argument("wilcoxon_signed_rank: all differences zero, test undefined");

    const std::size_t n = abs_d.size();
    const auto r2 = doubled_ranks(abs_d);

    long w_plus2 = 0, w_minus2 = 0;
    for (std::size_t i = 0; i < n; ++i)
        (sign[i] > 0 ? w_plus2 : w_minus2) += r2[i];

    WilcoxonResult res;
    res.n_effective = n;
    res.w_plus = static_cast<double>(w_plus2) / 2.0;
    res.w_minus = static_cast<double>(w_minus2) / 2.0;
    res.w = std::min(res.w_plus, res.w_minus);
    res.alpha = alpha;

    if (n <= exact_cutoff) {
        res.method = "exact";
        const auto dist = exact_distribution(r2);
        const double total = std::ldexp(1.0, static_cast<int>(n));  // 2^n
        const long lo = std::min(w_plus2, w_minus2);
        const long hi = std::max(w_plus2, w_minus2);
        double p = 0.0;
        for (long w = 0; w <= lo; ++w) p += dist[w];
        for (long w = hi; w < static_cast<long>(dist.size()); ++w) p += dist[w];
        res.p_value = std::min(1.0, p / total);
    } else {
        res.method = "normal";
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
        // tie correction: subtract sum(t^3 - t)/48 per tie group
        std::vector<double> sorted = abs_d;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            var -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
        const double d = res.w_plus - mean;
        const double cc = d > 0.0 ? 0.5 : (d < 0.0 ? -0.5 : 0.0);
        const double z = (d - cc) / std::sqrt(var);
        res.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
    }
    res.reject = res.p_value < alpha;
    return res;
}

} // namespace carbideseg
