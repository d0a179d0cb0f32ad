#pragma once

#include <functional>
#include <string>
#include <vector>

namespace carbideseg {

// Objective with gradient: returns f(x) and fills grad (same size as x).
using ObjectiveFn =
    std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct LbfgsOptions {
    int memory = 10;
    double c1 = 1e-4;              // Armijo (sufficient decrease)
    double c2 = 0.9;               // strong curvature
    double grad_tol = 1e-8;        // infinity norm
    double step_tol = 1e-12;       // ||x_{k+1}-x_k||_inf
    int max_iterations = 200;
    int max_line_search = 50;
};

// One accepted line-search step; lets callers audit the Wolfe conditions.
struct LbfgsStep {
    double alpha = 0.0;
    double f0 = 0.0;       // objective at step start
    double f1 = 0.0;       // objective at accepted point
    double dg0 = 0.0;      // directional derivative at step start
    double dg1 = 0.0;      // directional derivative at accepted point
};

struct LbfgsResult {
    std::vector<double> x;
    double f = 0.0;
    double grad_norm = 0.0;  // infinity norm at x
    int iterations = 0;
    bool converged = false;
    std::string message;
    std::vector<LbfgsStep> steps;
};

// Limited-memory BFGS with two-loop recursion and a strong-Wolfe line
// search (bracketing + zoom). Returns the best iterate seen on failure.
LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, std::vector<double> x0,
                           const LbfgsOptions& opts = {});

} // namespace carbideseg
