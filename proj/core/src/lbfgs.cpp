#include "carbideseg/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace carbideseg {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct Eval {
    double f;
    std::vector<double> g;
};

} // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, std::vector<double> x0,
                           const LbfgsOptions& opts) {
    const std::size_t dim = x0.size();
    LbfgsResult res;
    res.x = std::move(x0);

    std::vector<double> g(dim);
    double f = objective(res.x, g);
    if (!std::isfinite(f))
        throw std::runtime_error("lbfgs_minimize: objective not finite at x0");

    std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)
    std::deque<double> rho;

    auto eval_along = [&](const std::vector<double>& x, const std::vector<double>& d,
                          double alpha, Eval& out) {
        std::vector<double> xt(dim);
        for (std::size_t i = 0; i < dim; ++i) xt[i] = x[i] + alpha * d[i];
        out.g.resize(dim);
        out.f = objective(xt, out.g);
    };

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        res.grad_norm = inf_norm(g);
        if (res.grad_norm < opts.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            break;
        }

        // two-loop recursion
        std::vector<double> d = g;
        std::vector<double> alpha_i(pairs.size());
        for (std::size_t i = pairs.size(); i-- > 0;) {
            alpha_i[i] = rho[i] * dot(pairs[i].first, d);
            for (std::size_t k = 0; k < dim; ++k) d[k] -= alpha_i[i] * pairs[i].second[k];
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            const double gamma = dot(s, y) / dot(y, y);
            for (auto& v : d) v *= gamma;
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double beta = rho[i] * dot(pairs[i].second, d);
            for (std::size_t k = 0; k < dim; ++k)
                d[k] += (alpha_i[i] - beta) * pairs[i].first[k];
        }
        for (auto& v : d) v = -v;

        double dg0 = dot(g, d);
        if (dg0 >= 0.0) {  // not a descent direction, restart with steepest descent
            pairs.clear();
            rho.clear();
            for (std::size_t k = 0; k < dim; ++k) d[k] = -g[k];
            dg0 = dot(g, d);
        }

        // strong-Wolfe line search: bracketing phase then zoom
        const double f0 = f;
        double alpha_prev = 0.0, f_prev = f0;
        double alpha = 1.0;
        double alpha_max = 1e10;
        Eval cur;
        bool accepted = false;
        double lo = 0.0, hi = 0.0, f_lo = f0;
        bool need_zoom = false;

        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            eval_along(res.x, d, alpha, cur);
            const double dg = dot(cur.g, d);
            if (!std::isfinite(cur.f) || cur.f > f0 + opts.c1 * alpha * dg0 ||
                (ls > 0 && cur.f >= f_prev)) {
                lo = alpha_prev; hi = alpha; f_lo = f_prev;
                need_zoom = true;
                break;
            }
            if (std::abs(dg) <= -opts.c2 * dg0) {
                accepted = true;
                break;
            }
            if (dg >= 0.0) {
                lo = alpha; hi = alpha_prev; f_lo = cur.f;
                need_zoom = true;
                break;
            }
            alpha_prev = alpha; f_prev = cur.f;
            alpha = std::min(2.0 * alpha, alpha_max);
        }

        if (need_zoom) {
            for (int z = 0; z < opts.max_line_search; ++z) {
                alpha = 0.5 * (lo + hi);
                eval_along(res.x, d, alpha, cur);
                const double dg = dot(cur.g, d);
                if (!std::isfinite(cur.f) || cur.f > f0 + opts.c1 * alpha * dg0 ||
                    cur.f >= f_lo) {
                    hi = alpha;
                } else {
                    if (std::abs(dg) <= -opts.c2 * dg0) {
                        accepted = true;
                        break;
                    }
                    if (dg * (hi - lo) >= 0.0) hi = lo;
                    lo = alpha; f_lo = cur.f;
                }
                if (std::abs(hi - lo) < 1e-16) break;
            }
        }

        if (!accepted) {
            res.message = "line search failed";
            res.iterations = iter;
            res.f = f;
            return res;  // converged stays false, best iterate retained
        }

        // record and apply the accepted step
        LbfgsStep step;
        step.alpha = alpha;
        step.f0 = f0;
        step.f1 = cur.f;
        step.dg0 = dg0;
        step.dg1 = dot(cur.g, d);
        res.steps.push_back(step);

        std::vector<double> s(dim), y(dim);
        double step_norm = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            s[k] = alpha * d[k];
            step_norm = std::max(step_norm, std::abs(s[k]));
            res.x[k] += s[k];
            y[k] = cur.g[k] - g[k];
        }
        f = cur.f;
        g = cur.g;
        res.iterations = iter + 1;

        const double sy = dot(s, y);
        if (sy > 1e-12 * dot(y, y)) {
            pairs.emplace_back(std::move(s), std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(pairs.size()) > opts.memory) {
                pairs.pop_front();
                rho.pop_front();
            }
        }

        if (step_norm < opts.step_tol) {
            res.converged = true;
            res.message = "step tolerance reached";
            break;
        }
    }

    if (!res.converged && res.message.empty()) {
        res.grad_norm = inf_norm(g);
        if (res.grad_norm < opts.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
        } else {
            res.message = "iteration cap reached";
        }
    }
    res.f = f;
    res.grad_norm = inf_norm(g);
    return res;
}

} // namespace carbideseg
