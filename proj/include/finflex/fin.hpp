#pragma once

// The FIN distribution: a five-parameter generalisation of the normal with
// location mu, scale sigma, body shape alpha, tail shape beta, and skewness
// kappa. The density is built from a piecewise upper-incomplete-gamma kernel
// whose two halves meet continuously at the mode; the effective tail
// exponents are beta*kappa on the left and beta/kappa on the right.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "finflex/rng.hpp"
#include "finflex/special.hpp"

namespace finflex {

namespace detail {

inline double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

} // namespace detail

class FinParams {
public:
    FinParams(double mu, double sigma, double alpha, double beta, double kappa)
        : mu_(mu), sigma_(sigma), alpha_(alpha), beta_(beta), kappa_(kappa) {
        if (!std::isfinite(mu))
            throw std::domain_error("FinParams: mu must be finite");
        for (double v : {sigma, alpha, beta, kappa})
            if (!std::isfinite(v) || v <= 0.0)
                throw std::domain_error("FinParams: sigma, alpha, beta, kappa must be positive");
        p_left_ = alpha / (beta * kappa);
        q_right_ = alpha * kappa / beta;
        pp_left_ = (alpha + 1.0) / (beta * kappa);
        qq_right_ = (alpha + 1.0) * kappa / beta;
        log_kappa_ = std::log(kappa);
        log_phi_ = std::lgamma(p_left_) - std::lgamma(q_right_) - 2.0 * log_kappa_;
        // delta = kappa^-1 Gamma((a+1)/(bk)) + phi^((a+1)/a) kappa Gamma((a+1)k/b)
        const double c = (alpha + 1.0) / alpha;
        const double left = -log_kappa_ + std::lgamma(pp_left_);
        const double right = c * log_phi_ + log_kappa_ + std::lgamma(qq_right_);
        log_delta_ = detail::log_sum_exp(left, right);
    }

    double mu() const { return mu_; }
    double sigma() const { return sigma_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double kappa() const { return kappa_; }

    double phi() const { return std::exp(log_phi_); }
    double log_phi() const { return log_phi_; }
    double delta() const { return std::exp(log_delta_); }
    double log_delta() const { return log_delta_; }

    // Gamma first arguments of the two kernel halves and of the CDF terms.
    double p_left() const { return p_left_; }       // alpha/(beta*kappa)
    double q_right() const { return q_right_; }     // alpha*kappa/beta
    double pp_left() const { return pp_left_; }     // (alpha+1)/(beta*kappa)
    double qq_right() const { return qq_right_; }   // (alpha+1)*kappa/beta

    double left_tail_coeff() const { return beta_ * kappa_; }
    double right_tail_coeff() const { return beta_ / kappa_; }

    double standardize(double x) const { return (x - mu_) / sigma_; }

private:
    double mu_, sigma_, alpha_, beta_, kappa_;
    double p_left_, q_right_, pp_left_, qq_right_;
    double log_kappa_, log_phi_, log_delta_;
};

// --- kernel ---------------------------------------------------------------

/// ln k(z) of the standard FIN kernel; -inf when the kernel underflows.
inline double log_kernel(double z, const FinParams& p,
                         const PrecisionPolicy& pol = PrecisionPolicy{}) {
    constexpr double kLogHuge = 700.0;
    if (z <= 0.0) {
        const double la = (z == 0.0) ? -std::numeric_limits<double>::infinity()
                                     : std::log(-z);
        const double lv = p.left_tail_coeff() * la;
        if (lv > kLogHuge) return -std::numeric_limits<double>::infinity();
        const double v = std::exp(lv);
        return -std::log(p.kappa()) + log_upper_inc_gamma(p.p_left(), v, pol);
    }
    const double lw = -p.log_phi() / p.alpha() + std::log(z);
    const double lu = p.right_tail_coeff() * lw;
    if (lu > kLogHuge) return -std::numeric_limits<double>::infinity();
    const double u = std::exp(lu);
    return p.log_phi() + std::log(p.kappa()) +
           log_upper_inc_gamma(p.q_right(), u, pol);
}

inline double kernel(double z, const FinParams& p,
                     const PrecisionPolicy& pol = PrecisionPolicy{}) {
    return std::exp(log_kernel(z, p, pol));
}

/// d/dz k(z): beta |z|^(alpha-1) e^(-|z|^(beta kappa)) on the left,
/// -beta z^(alpha-1) e^(-(phi^(-1/alpha) z)^(beta/kappa)) on the right.
inline double derivative_kernel(double z, const FinParams& p) {
    const double a = p.alpha();
    if (z <= 0.0) {
        const double az = -z;
        if (az == 0.0) {
            if (a > 1.0) return 0.0;
            if (a == 1.0) return p.beta();
            return std::numeric_limits<double>::infinity();
        }
        const double lv = p.left_tail_coeff() * std::log(az);
        if (lv > 700.0) return 0.0;
        return p.beta() * std::exp((a - 1.0) * std::log(az) - std::exp(lv));
    }
    const double lw = -p.log_phi() / a + std::log(z);
    const double lu = p.right_tail_coeff() * lw;
    if (lu > 700.0) return 0.0;
    return -p.beta() * std::exp((a - 1.0) * std::log(z) - std::exp(lu));
}

// --- density --------------------------------------------------------------

inline double log_pdf(double x, const FinParams& p,
                      const PrecisionPolicy& pol = PrecisionPolicy{}) {
    const double z = p.standardize(x);
    return log_kernel(z, p, pol) - p.log_delta() - std::log(p.sigma());
}

inline double pdf(double x, const FinParams& p,
                  const PrecisionPolicy& pol = PrecisionPolicy{}) {
    return std::exp(log_pdf(x, p, pol));
}

// --- distribution function -------------------------------------------------

inline double cdf(double x, const FinParams& p,
                  const PrecisionPolicy& pol = PrecisionPolicy{}) {
    const double z = p.standardize(x);
    constexpr double kLogHuge = 700.0;
    if (z <= 0.0) {
        // F = kappa^-1/delta * (Gamma(pp, v) - |z| Gamma(p, v)), v = |z|^(bk)
        const double az = -z;
        const double la = (az == 0.0) ? -std::numeric_limits<double>::infinity()
                                      : std::log(az);
        const double lv = p.left_tail_coeff() * la;
        if (lv > kLogHuge) return 0.0;
        const double v = std::exp(lv);
        const double ln_a = log_upper_inc_gamma(p.pp_left(), v, pol);
        const double ln_b = log_upper_inc_gamma(p.p_left(), v, pol);
        const double ratio = la + ln_b - ln_a;
        if (ratio >= 0.0) return 0.0;
        const double lf = -std::log(p.kappa()) - p.log_delta() + ln_a +
                          std::log1p(-std::exp(ratio));
        return std::exp(lf);
    }
    // F = 1 - kappa phi^((a+1)/a)/delta * (Gamma(qq, u) - w Gamma(q, u)),
    // w = phi^(-1/alpha) z, u = w^(beta/kappa)
    const double lw = -p.log_phi() / p.alpha() + std::log(z);
    const double lu = p.right_tail_coeff() * lw;
    if (lu > kLogHuge) return 1.0;
    const double u = std::exp(lu);
    const double ln_a = log_upper_inc_gamma(p.qq_right(), u, pol);
    const double ln_b = log_upper_inc_gamma(p.q_right(), u, pol);
    const double ratio = lw + ln_b - ln_a;
    if (ratio >= 0.0) return 1.0;
    const double c = (p.alpha() + 1.0) / p.alpha();
    const double ls = std::log(p.kappa()) + c * p.log_phi() - p.log_delta() +
                      ln_a + std::log1p(-std::exp(ratio));
    const double s = std::exp(ls);
    return s >= 1.0 ? 0.0 : 1.0 - s;
}

// --- quantile and sampling -------------------------------------------------

/// Inverse CDF by bracket expansion followed by a safeguarded
/// secant/bisection hybrid; |cdf(x) - u| <= 1e-10 at the returned point.
inline double quantile(double u, const FinParams& p,
                       const PrecisionPolicy& pol = PrecisionPolicy{}) {
    if (!(u > 0.0) || !(u < 1.0))
        throw std::domain_error("quantile: u must lie in (0,1)");
    constexpr double kTol = 1e-10;
    double lo = p.mu(), hi = p.mu();
    double flo = cdf(lo, p, pol) - u;
    double fhi = flo;
    if (flo > 0.0) {
        double step = p.sigma();
        for (int k = 0; k < 200 && flo > 0.0; ++k) {
            hi = lo;
            fhi = flo;
            lo -= step;
            step *= 2.0;
            flo = cdf(lo, p, pol) - u;
        }
    } else {
        double step = p.sigma();
        for (int k = 0; k < 200 && fhi < 0.0; ++k) {
            lo = hi;
            flo = fhi;
            hi += step;
            step *= 2.0;
            fhi = cdf(hi, p, pol) - u;
        }
    }
    if (std::abs(flo) <= kTol) return lo;
    if (std::abs(fhi) <= kTol) return hi;
    double m = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        // secant proposal, falling back to bisection when degenerate
        double cand = (fhi != flo)
                          ? hi - fhi * (hi - lo) / (fhi - flo)
                          : 0.5 * (lo + hi);
        if (!(cand > lo) || !(cand < hi))
            cand = 0.5 * (lo + hi);
        const double fc = cdf(cand, p, pol) - u;
        m = cand;
        if (std::abs(fc) <= kTol) return m;
        if (fc < 0.0) {
            lo = cand;
            flo = fc;
        } else {
            hi = cand;
            fhi = fc;
        }
        if (hi - lo < 1e-15 * std::max({1.0, std::abs(lo), std::abs(hi)}))
            break;
    }
    return m;
}

/// n i.i.d. draws by inverse-CDF of splitmix64 uniforms; deterministic per seed.
inline std::vector<double> sample(std::size_t n, const FinParams& p,
                                  std::uint64_t seed,
                                  const PrecisionPolicy& pol = PrecisionPolicy{}) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = quantile(rng.uniform01(), p, pol);
    return out;
}

// --- moments ----------------------------------------------------------------

/// E(Z^r) of the standard FIN (mu=0, sigma=1 coordinates of p's shape).
inline double raw_moment_standard(int r, const FinParams& p) {
    if (r < 0) throw std::domain_error("raw_moment_standard: r must be >= 0");
    if (r == 0) return 1.0;
    const double a = p.alpha(), b = p.beta(), k = p.kappa();
    const double s = r + a + 1.0;
    const double ln_t1 = -std::log(k) - std::log(r + 1.0) + std::lgamma(s / (b * k));
    const double ln_t2 = (s / a) * p.log_phi() + std::log(k) - std::log(r + 1.0) +
                         std::lgamma(s * k / b);
    const double sign = (r % 2 == 0) ? 1.0 : -1.0;
    return sign * std::exp(ln_t1 - p.log_delta()) + std::exp(ln_t2 - p.log_delta());
}

/// E(X^r) by the binomial expansion of (mu + sigma Z)^r.
inline double raw_moment(int r, const FinParams& p) {
    if (r < 0) throw std::domain_error("raw_moment: r must be >= 0");
    double sum = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= r; ++k) {
        sum += binom * std::pow(p.mu(), r - k) * std::pow(p.sigma(), k) *
               raw_moment_standard(k, p);
        binom = binom * (r - k) / (k + 1.0);
    }
    return sum;
}

struct ShapeStats {
    double mean;
    double variance;
    double skewness;
    double excess_kurtosis;
};

inline ShapeStats shape_stats(const FinParams& p) {
    const double m1 = raw_moment_standard(1, p);
    const double m2 = raw_moment_standard(2, p);
    const double m3 = raw_moment_standard(3, p);
    const double m4 = raw_moment_standard(4, p);
    const double var_z = m2 - m1 * m1;
    const double c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
    const double c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
    return ShapeStats{
        p.mu() + p.sigma() * m1,
        p.sigma() * p.sigma() * var_z,
        c3 / std::pow(var_z, 1.5),
        c4 / (var_z * var_z) - 3.0,
    };
}

// --- submodel constructors (Table-4 parameter mappings) ---------------------

/// FIN equal to N(mu, sigma^2); FIN(mu, s, 2, 2, 1) is normal with sd s/sqrt(2).
inline FinParams normal_submodel(double mu, double sigma) {
    return FinParams(mu, sigma * std::sqrt(2.0), 2.0, 2.0, 1.0);
}

inline FinParams laplace_submodel(double mu, double sigma) {
    return FinParams(mu, sigma, 1.0, 1.0, 1.0);
}

inline FinParams power_normal_submodel(double mu, double sigma, double s) {
    return FinParams(mu, sigma, s, s, 1.0);
}

inline FinParams ftn_submodel(double mu, double sigma, double beta, double kappa) {
    return FinParams(mu, sigma, 2.0, beta, kappa);
}

inline FinParams btn_submodel(double mu, double sigma, double alpha, double beta) {
    return FinParams(mu, sigma, alpha, beta, 1.0);
}

} // namespace finflex
