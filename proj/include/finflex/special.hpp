#pragma once

// Upper incomplete gamma function, its partial derivatives, and the digamma
// function. Everything here is a pure function of its arguments; tail
// quantities are computed in log space and exponentiated last.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace finflex {

struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PrecisionPolicy {
    double rel_tol = 1e-12;
    int max_iter = 500;
    double fd_step_scale = 1.0;

    void validate() const {
        if (!(rel_tol > 0.0) || rel_tol > 1e-3)
            throw std::domain_error("PrecisionPolicy: rel_tol must be in (0, 1e-3]");
        if (max_iter < 50)
            throw std::domain_error("PrecisionPolicy: max_iter must be >= 50");
        if (!(fd_step_scale > 0.0))
            throw std::domain_error("PrecisionPolicy: fd_step_scale must be positive");
    }
};

/// Digamma psi(u) for u > 0. Recurrence up to u >= 10, then the asymptotic
/// Bernoulli series; absolute error below 1e-12 for u >= 1e-3.
inline double digamma(double u) {
    if (!std::isfinite(u) || u <= 0.0)
        throw std::domain_error("digamma: argument must be positive and finite");
    double acc = 0.0;
    while (u < 10.0) {
        acc -= 1.0 / u;
        u += 1.0;
    }
    const double t = 1.0 / (u * u);
    const double series =
        t * (1.0 / 12.0 -
        t * (1.0 / 120.0 -
        t * (1.0 / 252.0 -
        t * (1.0 / 240.0 -
        t * (1.0 / 132.0 -
        t * (691.0 / 32760.0 -
        t / 12.0))))));
    return acc + std::log(u) - 0.5 / u - series;
}

namespace detail {

// Regularized lower series: returns log of sum_{n>=0} x^n / (a(a+1)...(a+n)),
// the series factor of P(a,x) = x^a e^-x / Gamma(a) * sum.
inline double lower_series_log_sum(double a, double x, const PrecisionPolicy& pol) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < pol.max_iter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * pol.rel_tol)
            return std::log(sum);
    }
    throw convergence_error("upper_inc_gamma: series did not converge (a=" +
                            std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

// Modified-Lentz continued fraction for Gamma(a,x), valid for x >= a+1.
// Returns log of the fraction h with Gamma(a,x) = e^{-x + a ln x} * h.
inline double upper_cf_log(double a, double x, const PrecisionPolicy& pol) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= pol.max_iter; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < pol.rel_tol)
            return std::log(h);
    }
    throw convergence_error("upper_inc_gamma: continued fraction did not converge (a=" +
                            std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

} // namespace detail

/// ln Gamma(a,x) for a > 0, x >= 0, without intermediate underflow: usable for
/// x well beyond 700 where Gamma(a,x) itself is subnormal or zero.
inline double log_upper_inc_gamma(double a, double x,
                                  const PrecisionPolicy& pol = PrecisionPolicy{}) {
    if (!std::isfinite(a) || a <= 0.0)
        throw std::domain_error("log_upper_inc_gamma: a must be positive and finite");
    if (std::isnan(x) || x < 0.0)
        throw std::domain_error("log_upper_inc_gamma: x must be nonnegative");
    if (x == 0.0)
        return std::lgamma(a);
    if (std::isinf(x))
        return -std::numeric_limits<double>::infinity();
    if (x < a + 1.0) {
        const double log_p = -x + a * std::log(x) - std::lgamma(a) +
                             detail::lower_series_log_sum(a, x, pol);
        const double p = std::exp(log_p);
        if (p >= 1.0)
            return -std::numeric_limits<double>::infinity();
        return std::lgamma(a) + std::log1p(-p);
    }
    return -x + a * std::log(x) + detail::upper_cf_log(a, x, pol);
}

/// Gamma(a,x) = integral_x^inf t^{a-1} e^{-t} dt. Underflows to 0 for huge x.
inline double upper_inc_gamma(double a, double x,
                              const PrecisionPolicy& pol = PrecisionPolicy{}) {
    return std::exp(log_upper_inc_gamma(a, x, pol));
}

/// d/dv Gamma(u,v) = -v^{u-1} e^{-v}. Singular at v=0 when u<1.
inline double psi2(double u, double v) {
    if (!std::isfinite(u) || u <= 0.0)
        throw std::domain_error("psi2: u must be positive and finite");
    if (std::isnan(v) || v < 0.0)
        throw std::domain_error("psi2: v must be nonnegative");
    if (v == 0.0) {
        if (u > 1.0) return 0.0;
        if (u == 1.0) return -1.0;
        throw std::domain_error("psi2: singular at v=0 for u<1");
    }
    return -std::exp((u - 1.0) * std::log(v) - v);
}

/// d/du ln Gamma(u,v), by Richardson-extrapolated central differences of
/// log_upper_inc_gamma in u. The ratio form used by the likelihood gradient.
inline double dlog_upper_inc_gamma_du(double u, double v,
                                      const PrecisionPolicy& pol = PrecisionPolicy{}) {
    if (!std::isfinite(u) || u <= 0.0)
        throw std::domain_error("dlog_upper_inc_gamma_du: u must be positive");
    if (v == 0.0)
        return digamma(u);
    const double eps_cbrt = 6.055454452393343e-6; // eps^(1/3)
    double h = pol.fd_step_scale * std::max(1.0, std::abs(u)) * eps_cbrt;
    if (h > 0.4 * u) h = 0.4 * u;
    const auto g = [&](double t) { return log_upper_inc_gamma(t, v, pol); };
    const double d_full = (g(u + h) - g(u - h)) / (2.0 * h);
    const double d_half = (g(u + 0.5 * h) - g(u - 0.5 * h)) / h;
    return (4.0 * d_half - d_full) / 3.0;
}

/// psi1(u,v) = d/du Gamma(u,v). At v=0 this is Gamma'(u) = Gamma(u) psi(u).
inline double psi1(double u, double v,
                   const PrecisionPolicy& pol = PrecisionPolicy{}) {
    if (v == 0.0)
        return std::exp(std::lgamma(u)) * digamma(u);
    return std::exp(log_upper_inc_gamma(u, v, pol)) *
           dlog_upper_inc_gamma_du(u, v, pol);
}

} // namespace finflex
