#pragma once

// Minimal dense BFGS with Armijo backtracking, used by the ML fitter.

#include <cmath>
#include <functional>
#include <vector>

namespace finflex {

struct OptimResult {
    std::vector<double> x;
    double f = 0.0;
    double grad_inf_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimizes f(x) given a combined value+gradient callback.
/// Convergence: gradient infinity-norm below grad_tol, or relative
/// objective change below f_rel_tol.
inline OptimResult bfgs_minimize(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& fg,
    std::vector<double> x0, double grad_tol = 1e-6, int max_iter = 500,
    double f_rel_tol = 1e-14) {
    const std::size_t n = x0.size();
    std::vector<double> g(n), g_new(n), d(n), s(n), y(n), hy(n);
    std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) h[i][i] = 1.0;

    OptimResult res;
    res.x = std::move(x0);
    double f = fg(res.x, g);

    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter;
        double gnorm = 0.0;
        for (double v : g) gnorm = std::max(gnorm, std::abs(v));
        res.grad_inf_norm = gnorm;
        if (gnorm < grad_tol) {
            res.converged = true;
            break;
        }
        // d = -H g
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += h[i][j] * g[j];
            d[i] = -acc;
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) slope += d[i] * g[i];
        if (slope >= 0.0) {
            // reset to steepest descent if H lost positive definiteness
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) h[i][j] = (i == j) ? 1.0 : 0.0;
                d[i] = -g[i];
            }
            slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) slope += d[i] * g[i];
            if (slope >= 0.0) break;
        }
        double step = 1.0;
        double f_new = f;
        std::vector<double> x_new(n);
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * d[i];
            bool ok = true;
            try {
                f_new = fg(x_new, g_new);
            } catch (...) {
                ok = false;
            }
            if (ok && std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - res.x[i];
            y[i] = g_new[i] - g[i];
            sy += s[i] * y[i];
        }
        const double f_change = std::abs(f - f_new);
        res.x = x_new;
        const double f_prev = f;
        f = f_new;
        g = g_new;
        if (f_change <= f_rel_tol * std::max(1.0, std::abs(f_prev))) {
            res.converged = true;
            double gn = 0.0;
            for (double v : g) gn = std::max(gn, std::abs(v));
            res.grad_inf_norm = gn;
            res.iterations = iter + 1;
            break;
        }
        if (sy > 1e-12) {
            // BFGS update of the inverse Hessian
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += h[i][j] * y[j];
                hy[i] = acc;
            }
            double yhy = 0.0;
            for (std::size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
            const double rho = 1.0 / sy;
            const double c = (1.0 + rho * yhy) * rho;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    h[i][j] += c * s[i] * s[j] -
                               rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
    res.f = f;
    double gn = 0.0;
    for (double v : g) gn = std::max(gn, std::abs(v));
    res.grad_inf_norm = gn;
    return res;
}

/// 1-D golden-section maximization on [lo, hi].
inline double golden_section_max(const std::function<double(double)>& f,
                                 double lo, double hi, double tol = 1e-4,
                                 int max_iter = 200) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

} // namespace finflex
