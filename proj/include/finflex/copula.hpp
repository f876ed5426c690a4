#pragma once

// Gaussian and Student-t copulas over fitted marginals: pseudo-observation
// transform, correlation estimation with PSD projection, profile-likelihood
// df search, joint log-likelihood/AIC, and joint sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "finflex/errors.hpp"
#include "finflex/estimate.hpp"
#include "finflex/fin.hpp"
#include "finflex/optim.hpp"
#include "finflex/rng.hpp"

namespace finflex {

inline constexpr double kUniformClamp = 1e-10;

struct CorrelationMatrix {
    Eigen::MatrixXd entries;

    int dim() const { return static_cast<int>(entries.rows()); }

    void validate() const {
        const int d = dim();
        if (d < 1 || entries.cols() != d)
            throw validation_error("correlation matrix must be square");
        for (int i = 0; i < d; ++i) {
            if (std::abs(entries(i, i) - 1.0) > 1e-12)
                throw validation_error("correlation diagonal must be 1");
            for (int j = 0; j < i; ++j) {
                if (std::abs(entries(i, j) - entries(j, i)) > 1e-12)
                    throw validation_error("correlation matrix must be symmetric");
                if (std::abs(entries(i, j)) > 1.0 + 1e-12)
                    throw validation_error("correlation entries must lie in [-1,1]");
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries,
                                                          Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw validation_error("correlation matrix is not PSD");
    }
};

enum class CopulaFamily { gaussian, student_t };

inline std::string copula_family_name(CopulaFamily f) {
    return f == CopulaFamily::gaussian ? "gaussian" : "student_t";
}

struct CopulaModel {
    CopulaFamily family = CopulaFamily::gaussian;
    CorrelationMatrix corr;
    double df = 0.0; // student_t only
    std::vector<FitResult> marginals;
    double loglik = 0.0;
    // largest entry displacement introduced by the PSD projection
    double psd_residual = 0.0;
};

/// Eigenvalue-clipped nearest PSD correlation. Clips negative eigenvalues,
/// reconstructs, and renormalizes back to unit diagonal.
inline CorrelationMatrix nearest_psd_correlation(const Eigen::MatrixXd& m,
                                                 double* residual = nullptr) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
    Eigen::MatrixXd r =
        es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    const int d = static_cast<int>(r.rows());
    Eigen::VectorXd scale = r.diagonal().cwiseSqrt();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) r(i, j) /= scale(i) * scale(j);
    r = 0.5 * (r + r.transpose());
    for (int i = 0; i < d; ++i) r(i, i) = 1.0;
    if (residual) *residual = (r - sym).cwiseAbs().maxCoeff();
    return CorrelationMatrix{std::move(r)};
}

/// u_ij = cdf(x_ij; marginal_j), clamped away from {0, 1}.
inline Eigen::MatrixXd to_pseudo_obs(const Eigen::MatrixXd& x,
                                     const std::vector<FitResult>& marginals) {
    const int d = static_cast<int>(x.cols());
    if (static_cast<int>(marginals.size()) != d)
        throw std::domain_error("to_pseudo_obs: one marginal per column required");
    if (x.rows() < 10)
        throw std::domain_error("to_pseudo_obs: need at least 10 rows");
    Eigen::MatrixXd u(x.rows(), d);
    for (int j = 0; j < d; ++j) {
        const FinParams p = marginals[static_cast<std::size_t>(j)].params();
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            u(i, j) = std::clamp(cdf(x(i, j), p), kUniformClamp,
                                 1.0 - kUniformClamp);
    }
    return u;
}

namespace detail {

inline void check_pseudo_obs(const Eigen::MatrixXd& u) {
    if (u.rows() < 2 || u.cols() < 1)
        throw std::domain_error("pseudo-observation matrix too small");
    if ((u.array() <= 0.0).any() || (u.array() >= 1.0).any())
        throw std::domain_error("pseudo-observations must lie in (0,1)");
}

inline Eigen::MatrixXd normal_scores(const Eigen::MatrixXd& u) {
    const boost::math::normal_distribution<double> nd;
    Eigen::MatrixXd z(u.rows(), u.cols());
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        for (Eigen::Index j = 0; j < u.cols(); ++j)
            z(i, j) = boost::math::quantile(nd, u(i, j));
    return z;
}

inline Eigen::MatrixXd t_scores(const Eigen::MatrixXd& u, double df) {
    const boost::math::students_t_distribution<double> td(df);
    Eigen::MatrixXd z(u.rows(), u.cols());
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        for (Eigen::Index j = 0; j < u.cols(); ++j)
            z(i, j) = boost::math::quantile(td, u(i, j));
    return z;
}

inline Eigen::MatrixXd score_correlation(const Eigen::MatrixXd& z) {
    const double n = static_cast<double>(z.rows());
    Eigen::MatrixXd c = z.transpose() * z / n;
    const int d = static_cast<int>(c.rows());
    Eigen::VectorXd scale = c.diagonal().cwiseSqrt();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) c(i, j) /= scale(i) * scale(j);
    return c;
}

inline double gaussian_copula_loglik(const CorrelationMatrix& corr,
                                     const Eigen::MatrixXd& z) {
    const Eigen::LLT<Eigen::MatrixXd> llt(corr.entries);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("correlation matrix is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    double ll = -0.5 * static_cast<double>(z.rows()) * log_det;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const Eigen::VectorXd zi = z.row(i);
        const Eigen::VectorXd w = llt.solve(zi);
        ll -= 0.5 * (zi.dot(w) - zi.squaredNorm());
    }
    return ll;
}

inline double t_copula_loglik(const CorrelationMatrix& corr, double df,
                              const Eigen::MatrixXd& z) {
    const Eigen::LLT<Eigen::MatrixXd> llt(corr.entries);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("correlation matrix is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const double d = static_cast<double>(z.cols());
    const double n = static_cast<double>(z.rows());
    const double c0 = std::lgamma(0.5 * (df + d)) +
                      (d - 1.0) * std::lgamma(0.5 * df) -
                      d * std::lgamma(0.5 * (df + 1.0));
    double ll = n * (c0 - 0.5 * log_det);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const Eigen::VectorXd zi = z.row(i);
        const double q = zi.dot(llt.solve(zi));
        ll -= 0.5 * (df + d) * std::log1p(q / df);
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            ll += 0.5 * (df + 1.0) * std::log1p(zi(j) * zi(j) / df);
    }
    return ll;
}

} // namespace detail

inline CopulaModel fit_gaussian_copula(const Eigen::MatrixXd& u) {
    detail::check_pseudo_obs(u);
    CopulaModel model;
    model.family = CopulaFamily::gaussian;
    if (u.cols() == 1) {
        model.corr.entries = Eigen::MatrixXd::Identity(1, 1);
        model.loglik = 0.0;
        return model;
    }
    const Eigen::MatrixXd z = detail::normal_scores(u);
    model.corr = nearest_psd_correlation(detail::score_correlation(z),
                                         &model.psd_residual);
    model.loglik = detail::gaussian_copula_loglik(model.corr, z);
    return model;
}

inline CopulaModel fit_t_copula(const Eigen::MatrixXd& u) {
    detail::check_pseudo_obs(u);
    CopulaModel model;
    model.family = CopulaFamily::student_t;
    if (u.cols() == 1) {
        model.corr.entries = Eigen::MatrixXd::Identity(1, 1);
        model.df = 10.0;
        model.loglik = 0.0;
        return model;
    }
    // profile likelihood over df: correlation re-estimated per candidate
    const auto profile = [&](double log_df) {
        const double df = std::exp(log_df);
        const Eigen::MatrixXd z = detail::t_scores(u, df);
        const CorrelationMatrix corr =
            nearest_psd_correlation(detail::score_correlation(z));
        return detail::t_copula_loglik(corr, df, z);
    };
    const double log_df =
        golden_section_max(profile, std::log(2.1), std::log(200.0), 1e-4);
    model.df = std::exp(log_df);
    const Eigen::MatrixXd z = detail::t_scores(u, model.df);
    model.corr = nearest_psd_correlation(detail::score_correlation(z),
                                         &model.psd_residual);
    model.loglik = detail::t_copula_loglik(model.corr, model.df, z);
    return model;
}

inline double copula_loglik(const CopulaModel& model, const Eigen::MatrixXd& u) {
    detail::check_pseudo_obs(u);
    if (u.cols() != model.corr.dim())
        throw std::domain_error("copula_loglik: dimension mismatch");
    if (u.cols() == 1) return 0.0;
    if (model.family == CopulaFamily::gaussian)
        return detail::gaussian_copula_loglik(model.corr,
                                              detail::normal_scores(u));
    return detail::t_copula_loglik(model.corr, model.df,
                                   detail::t_scores(u, model.df));
}

inline double copula_aic(const CopulaModel& model, const Eigen::MatrixXd& u) {
    const double d = static_cast<double>(model.corr.dim());
    double k = 0.5 * d * (d - 1.0);
    if (model.family == CopulaFamily::student_t) k += 1.0;
    return 2.0 * k - 2.0 * copula_loglik(model, u);
}

/// Draws n joint observations. With fitted marginals the columns are returns
/// (marginal quantiles applied); without marginals the uniforms are returned.
inline Eigen::MatrixXd sample_joint(const CopulaModel& model, int n,
                                    std::uint64_t seed) {
    if (n < 1) throw std::domain_error("sample_joint: n must be positive");
    const int d = model.corr.dim();
    if (!model.marginals.empty() &&
        static_cast<int>(model.marginals.size()) != d)
        throw std::domain_error("sample_joint: marginal count mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(model.corr.entries);
    if (llt.info() != Eigen::Success)
        llt.compute(model.corr.entries +
                    1e-10 * Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd l = llt.matrixL();

    const boost::math::normal_distribution<double> nd;
    Rng rng(seed);
    const auto std_normal = [&] {
        return boost::math::quantile(nd, rng.uniform01());
    };

    const bool is_t = model.family == CopulaFamily::student_t;
    const boost::math::chi_squared_distribution<double> chi(is_t ? model.df
                                                                 : 1.0);
    Eigen::MatrixXd out(n, d);
    Eigen::VectorXd g(d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) g(j) = std_normal();
        Eigen::VectorXd z = l * g;
        if (is_t) {
            // chi-squared draw by inverse CDF keeps the stream deterministic
            const double w = boost::math::quantile(chi, rng.uniform01());
            z *= std::sqrt(model.df / w);
            const boost::math::students_t_distribution<double> td(model.df);
            for (int j = 0; j < d; ++j)
                out(i, j) = std::clamp(boost::math::cdf(td, z(j)),
                                       kUniformClamp, 1.0 - kUniformClamp);
        } else {
            for (int j = 0; j < d; ++j)
                out(i, j) = std::clamp(boost::math::cdf(nd, z(j)),
                                       kUniformClamp, 1.0 - kUniformClamp);
        }
    }
    if (!model.marginals.empty()) {
        for (int j = 0; j < d; ++j) {
            const FinParams p =
                model.marginals[static_cast<std::size_t>(j)].params();
            for (int i = 0; i < n; ++i) out(i, j) = quantile(out(i, j), p);
        }
    }
    return out;
}

/// Average ranks (ties share the mean rank), 1-based.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline CorrelationMatrix spearman_matrix(const Eigen::MatrixXd& data) {
    const int d = static_cast<int>(data.cols());
    const Eigen::Index n = data.rows();
    if (n < 3) throw std::domain_error("spearman_matrix: need at least 3 rows");
    Eigen::MatrixXd ranks(n, d);
    for (int j = 0; j < d; ++j) {
        std::vector<double> col(data.col(j).data(), data.col(j).data() + n);
        const auto r = average_ranks(col);
        bool constant = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            ranks(i, j) = r[static_cast<std::size_t>(i)];
            if (col[static_cast<std::size_t>(i)] != col[0]) constant = false;
        }
        if (constant)
            throw validation_error("spearman_matrix: column " +
                                   std::to_string(j) + " is constant");
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < a; ++b) {
            double ma = ranks.col(a).mean(), mb = ranks.col(b).mean();
            double sab = 0.0, saa = 0.0, sbb = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double da = ranks(i, a) - ma, db = ranks(i, b) - mb;
                sab += da * db;
                saa += da * da;
                sbb += db * db;
            }
            out(a, b) = out(b, a) = sab / std::sqrt(saa * sbb);
        }
    }
    return CorrelationMatrix{std::move(out)};
}

} // namespace finflex
