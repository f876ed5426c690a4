#pragma once

// Log-likelihood, analytic gradient, maximum-likelihood fitting, and
// model-selection metrics for the FIN family and its nested submodels.
//
// The gradient assembles psi1/psi2 ratio terms per observation with the
// exact dln(phi)/d. and dln(delta)/d. expressions (digamma chain rule);
// everything that can cancel or overflow is combined in log space first.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "finflex/errors.hpp"
#include "finflex/fin.hpp"
#include "finflex/optim.hpp"

namespace finflex {

enum class Family { fin, ftn, btn, ep, normal, laplace };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::fin: return "fin";
        case Family::ftn: return "ftn";
        case Family::btn: return "btn";
        case Family::ep: return "ep";
        case Family::normal: return "normal";
        case Family::laplace: return "laplace";
    }
    return "?";
}

inline Family family_from_string(const std::string& s) {
    if (s == "fin") return Family::fin;
    if (s == "ftn") return Family::ftn;
    if (s == "btn") return Family::btn;
    if (s == "ep") return Family::ep;
    if (s == "normal") return Family::normal;
    if (s == "laplace") return Family::laplace;
    throw validation_error("unknown family: " + s);
}

inline int free_param_count(Family f) {
    switch (f) {
        case Family::fin: return 5;
        case Family::ftn: return 4;
        case Family::btn: return 4;
        case Family::ep: return 3;
        case Family::normal: return 2;
        case Family::laplace: return 2;
    }
    return 0;
}

inline double loglik(const std::vector<double>& data, const FinParams& p,
                     const PrecisionPolicy& pol = PrecisionPolicy{}) {
    if (data.empty()) throw std::domain_error("loglik: empty data");
    double acc = 0.0;
    for (double x : data) acc += log_pdf(x, p, pol);
    return acc;
}

namespace detail {

struct ParamGradConstants {
    double dlnphi_da, dlnphi_db, dlnphi_dk;
    double dlnd_da, dlnd_db, dlnd_dk;
};

inline ParamGradConstants param_grad_constants(const FinParams& p) {
    const double a = p.alpha(), b = p.beta(), k = p.kappa();
    const double pl = p.p_left(), qr = p.q_right();
    const double pp = p.pp_left(), qq = p.qq_right();
    const double psi_pl = digamma(pl), psi_qr = digamma(qr);
    const double psi_pp = digamma(pp), psi_qq = digamma(qq);
    const double c = (a + 1.0) / a;

    ParamGradConstants g;
    g.dlnphi_da = psi_pl / (b * k) - psi_qr * k / b;
    g.dlnphi_db = -(a / (b * b)) * (psi_pl / k - psi_qr * k);
    g.dlnphi_dk = -psi_pl * pl / k - psi_qr * qr / k - 2.0 / k;

    // ln delta = logsumexp(L1, L2); weights are the two kernel-half masses
    const double l1 = -std::log(k) + std::lgamma(pp);
    const double l2 = c * p.log_phi() + std::log(k) + std::lgamma(qq);
    const double w1 = std::exp(l1 - p.log_delta());
    const double w2 = std::exp(l2 - p.log_delta());
    const double dl1_da = psi_pp / (b * k);
    const double dl1_db = -psi_pp * pp / b;
    const double dl1_dk = -1.0 / k - psi_pp * pp / k;
    const double dl2_da = (-1.0 / (a * a)) * p.log_phi() + c * g.dlnphi_da +
                          psi_qq * k / b;
    const double dl2_db = c * g.dlnphi_db - psi_qq * qq / b;
    const double dl2_dk = c * g.dlnphi_dk + 1.0 / k + psi_qq * qq / k;
    g.dlnd_da = w1 * dl1_da + w2 * dl2_da;
    g.dlnd_db = w1 * dl1_db + w2 * dl2_db;
    g.dlnd_dk = w1 * dl1_dk + w2 * dl2_dk;
    return g;
}

} // namespace detail

/// (dLL/dmu, dLL/dsigma, dLL/dalpha, dLL/dbeta, dLL/dkappa), summed over
/// observations. Observations with z exactly 0 are jittered to the left
/// branch by 1e-12; with alpha < 1 the gradient is singular there.
inline std::array<double, 5> loglik_grad(const std::vector<double>& data,
                                         const FinParams& p,
                                         const PrecisionPolicy& pol = PrecisionPolicy{}) {
    if (data.empty()) throw std::domain_error("loglik_grad: empty data");
    const double a = p.alpha(), b = p.beta(), k = p.kappa(), sig = p.sigma();
    const double pl = p.p_left(), qr = p.q_right();
    const auto gc = detail::param_grad_constants(p);

    std::array<double, 5> g{0.0, 0.0, 0.0, 0.0, 0.0};
    for (double x : data) {
        double z = p.standardize(x);
        if (z == 0.0) {
            if (a < 1.0)
                throw std::domain_error(
                    "loglik_grad: singular gradient at an observation equal to mu with alpha < 1");
            z = -1e-12;
        }
        if (z < 0.0) {
            const double la = std::log(-z);
            const double lv = b * k * la;
            const double v = std::exp(lv);
            const double ln_g = log_upper_inc_gamma(pl, v, pol);
            const double r1 = dlog_upper_inc_gamma_du(pl, v, pol);
            const double e0 = std::exp(a * la - v - ln_g);          // v^pl e^-v / G
            const double e1 = std::exp((a - 1.0) * la - v - ln_g);  // e0 / |z|
            g[0] += -b * k * e1 / sig;
            g[1] += -1.0 / sig + b * k * e0 / sig;
            g[2] += r1 / (b * k) - gc.dlnd_da;
            g[3] += -r1 * pl / b - k * la * e0 - gc.dlnd_db;
            g[4] += -1.0 / k - r1 * pl / k - b * la * e0 - gc.dlnd_dk;
        } else {
            const double lz = std::log(z);
            const double lw = -p.log_phi() / a + lz;
            const double lu = (b / k) * lw;
            const double u = std::exp(lu);
            const double ln_g = log_upper_inc_gamma(qr, u, pol);
            const double r1 = dlog_upper_inc_gamma_du(qr, u, pol);
            const double t2u = std::exp(qr * lu - u - ln_g);        // u^qr e^-u / G
            g[0] += (b / k) * std::exp(qr * lu - lz - u - ln_g) / sig;
            g[1] += -1.0 / sig + (b / k) * t2u / sig;
            const double dlnu_da = (b / (a * a * k)) * p.log_phi() -
                                   (b / (a * k)) * gc.dlnphi_da;
            const double dlnu_db = lu / b - (b / (a * k)) * gc.dlnphi_db;
            const double dlnu_dk = -lu / k - (b / (a * k)) * gc.dlnphi_dk;
            g[2] += gc.dlnphi_da + r1 * k / b - t2u * dlnu_da - gc.dlnd_da;
            g[3] += gc.dlnphi_db - r1 * qr / b - t2u * dlnu_db - gc.dlnd_db;
            g[4] += gc.dlnphi_dk + 1.0 / k + r1 * a / b - t2u * dlnu_dk - gc.dlnd_dk;
        }
    }
    return g;
}

// --- fitting -----------------------------------------------------------------

enum class GradientMode { analytic, numeric };

struct FitConfig {
    int max_iter = 500;
    double grad_tol = 1e-6;
    double param_lower_bound = 1e-4;
    GradientMode gradient_mode = GradientMode::analytic;
    int starts = 3;
    int min_obs = 20;
    PrecisionPolicy policy{};
};

struct FitResult {
    Family family = Family::fin;
    double mu = 0, sigma = 1, alpha = 2, beta = 2, kappa = 1;
    double loglik = 0;
    double aic = 0;
    double grad_norm = 0;
    bool converged = false;
    int n_obs = 0;
    int iterations = 0;
    int k_params = 0;

    FinParams params() const { return FinParams(mu, sigma, alpha, beta, kappa); }
};

namespace detail {

// Unconstrained coordinates: mu raw, positive parameters log-transformed.
inline FinParams params_from_theta(Family f, const std::vector<double>& th,
                                   double lb) {
    const auto ex = [lb](double t) {
        return std::clamp(std::exp(t), lb, 1e6);
    };
    switch (f) {
        case Family::fin:
            return FinParams(th[0], ex(th[1]), ex(th[2]), ex(th[3]), ex(th[4]));
        case Family::ftn:
            return FinParams(th[0], ex(th[1]), 2.0, ex(th[2]), ex(th[3]));
        case Family::btn:
            return FinParams(th[0], ex(th[1]), ex(th[2]), ex(th[3]), 1.0);
        case Family::ep: {
            const double s = ex(th[2]);
            return FinParams(th[0], ex(th[1]), s, s, 1.0);
        }
        case Family::normal:
            return FinParams(th[0], ex(th[1]), 2.0, 2.0, 1.0);
        case Family::laplace:
            return FinParams(th[0], ex(th[1]), 1.0, 1.0, 1.0);
    }
    throw std::logic_error("unreachable");
}

// Chain rule into theta space: d/d(ln p) = p * d/dp for log-transformed
// coordinates; tied parameters accumulate.
inline std::vector<double> grad_to_theta(Family f, const std::array<double, 5>& g5,
                                         const FinParams& p) {
    switch (f) {
        case Family::fin:
            return {g5[0], g5[1] * p.sigma(), g5[2] * p.alpha(),
                    g5[3] * p.beta(), g5[4] * p.kappa()};
        case Family::ftn:
            return {g5[0], g5[1] * p.sigma(), g5[3] * p.beta(), g5[4] * p.kappa()};
        case Family::btn:
            return {g5[0], g5[1] * p.sigma(), g5[2] * p.alpha(), g5[3] * p.beta()};
        case Family::ep:
            return {g5[0], g5[1] * p.sigma(), (g5[2] + g5[3]) * p.alpha()};
        case Family::normal:
        case Family::laplace:
            return {g5[0], g5[1] * p.sigma()};
    }
    throw std::logic_error("unreachable");
}

inline std::vector<double> theta_from_params(Family f, const FinParams& p) {
    switch (f) {
        case Family::fin:
            return {p.mu(), std::log(p.sigma()), std::log(p.alpha()),
                    std::log(p.beta()), std::log(p.kappa())};
        case Family::ftn:
            return {p.mu(), std::log(p.sigma()), std::log(p.beta()),
                    std::log(p.kappa())};
        case Family::btn:
            return {p.mu(), std::log(p.sigma()), std::log(p.alpha()),
                    std::log(p.beta())};
        case Family::ep:
            return {p.mu(), std::log(p.sigma()), std::log(p.alpha())};
        case Family::normal:
        case Family::laplace:
            return {p.mu(), std::log(p.sigma())};
    }
    throw std::logic_error("unreachable");
}

} // namespace detail

/// Maximum-likelihood fit via BFGS in unconstrained coordinates with
/// moment-informed multistarts. Deterministic for fixed (data, cfg).
/// `warm_starts` adds extra initializations (e.g. optima of nested fits).
inline FitResult fit_mle(const std::vector<double>& data, const FitConfig& cfg,
                         Family family,
                         const std::vector<FinParams>& warm_starts = {}) {
    if (static_cast<int>(data.size()) < cfg.min_obs)
        throw validation_error("fit_mle: need at least " +
                               std::to_string(cfg.min_obs) + " observations");
    const std::size_t n = data.size();
    double mean = 0.0;
    for (double x : data) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : data) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);
    const double sd = std::sqrt(std::max(var, 1e-300));

    std::vector<FinParams> starts;
    starts.emplace_back(mean, sd * std::sqrt(2.0), 2.0, 2.0, 1.0);
    const bool free_kappa = (family == Family::fin || family == Family::ftn);
    if (free_kappa && cfg.starts > 1) {
        starts.emplace_back(mean, sd * std::sqrt(2.0), 2.0, 2.0, 0.7);
        if (cfg.starts > 2)
            starts.emplace_back(mean, sd * std::sqrt(2.0), 2.0, 2.0, 1.4);
    }
    for (const auto& w : warm_starts) starts.push_back(w);

    const double inv_n = 1.0 / static_cast<double>(n);
    const auto fg = [&](const std::vector<double>& th, std::vector<double>& grad) {
        const FinParams p = detail::params_from_theta(family, th, cfg.param_lower_bound);
        const double ll = loglik(data, p, cfg.policy);
        if (cfg.gradient_mode == GradientMode::analytic) {
            const auto g5 = loglik_grad(data, p, cfg.policy);
            const auto gt = detail::grad_to_theta(family, g5, p);
            grad.resize(gt.size());
            for (std::size_t i = 0; i < gt.size(); ++i) grad[i] = -gt[i] * inv_n;
        } else {
            grad.resize(th.size());
            for (std::size_t i = 0; i < th.size(); ++i) {
                const double h = 1e-6 * std::max(1.0, std::abs(th[i]));
                auto tp = th, tm = th;
                tp[i] += h;
                tm[i] -= h;
                const double fp = loglik(
                    data, detail::params_from_theta(family, tp, cfg.param_lower_bound),
                    cfg.policy);
                const double fm = loglik(
                    data, detail::params_from_theta(family, tm, cfg.param_lower_bound),
                    cfg.policy);
                grad[i] = -(fp - fm) / (2.0 * h) * inv_n;
            }
        }
        return -ll * inv_n;
    };

    bool have_best = false;
    OptimResult best;
    for (const auto& s : starts) {
        OptimResult r;
        try {
            r = bfgs_minimize(fg, detail::theta_from_params(family, s),
                              cfg.grad_tol, cfg.max_iter);
        } catch (...) {
            continue;
        }
        if (!std::isfinite(r.f)) continue;
        if (!have_best || r.f < best.f) {
            best = r;
            have_best = true;
        }
    }
    if (!have_best)
        throw convergence_error("fit_mle: all starts diverged for family " +
                                std::string(family_name(family)));

    const FinParams p = detail::params_from_theta(family, best.x, cfg.param_lower_bound);
    FitResult res;
    res.family = family;
    res.mu = p.mu();
    res.sigma = p.sigma();
    res.alpha = p.alpha();
    res.beta = p.beta();
    res.kappa = p.kappa();
    res.loglik = -best.f * static_cast<double>(n);
    res.k_params = free_param_count(family);
    res.aic = 2.0 * res.k_params - 2.0 * res.loglik;
    res.grad_norm = best.grad_inf_norm;
    res.converged = best.converged;
    res.n_obs = static_cast<int>(n);
    res.iterations = best.iterations;
    return res;
}

inline double aic(const FitResult& fit) { return fit.aic; }

inline double out_of_sample_ll(const FitResult& fit,
                               const std::vector<double>& test_data,
                               const PrecisionPolicy& pol = PrecisionPolicy{}) {
    if (test_data.empty())
        throw std::domain_error("out_of_sample_ll: empty test data");
    return loglik(test_data, fit.params(), pol);
}

struct ModelRankingRow {
    std::string family;
    double aic;
    double oos_ll;
};

/// Ranking table sorted by AIC ascending, ties broken by out-of-sample LL
/// descending, then family name. All fits must come from the same data.
inline std::vector<ModelRankingRow> compare_models(
    const std::vector<FitResult>& fits, const std::vector<double>& test_data) {
    if (fits.size() < 2)
        throw std::domain_error("compare_models: need at least 2 fits");
    for (const auto& f : fits)
        if (f.n_obs != fits.front().n_obs)
            throw std::domain_error(
                "compare_models: fits were made on different data (n_obs mismatch)");
    std::vector<ModelRankingRow> rows;
    rows.reserve(fits.size());
    for (const auto& f : fits)
        rows.push_back({family_name(f.family), f.aic,
                        out_of_sample_ll(f, test_data)});
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.aic != b.aic) return a.aic < b.aic;
        if (a.oos_ll != b.oos_ll) return a.oos_ll > b.oos_ll;
        return a.family < b.family;
    });
    return rows;
}

} // namespace finflex
