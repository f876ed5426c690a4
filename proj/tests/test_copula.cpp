#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "finflex/copula.hpp"
#include "finflex/estimate.hpp"
#include "oracles.hpp"

using namespace finflex;

namespace {

FitResult marginal_of(const FinParams& p) {
    FitResult r;
    r.family = Family::fin;
    r.mu = p.mu();
    r.sigma = p.sigma();
    r.alpha = p.alpha();
    r.beta = p.beta();
    r.kappa = p.kappa();
    r.converged = true;
    return r;
}

CopulaModel make_copula(CopulaFamily fam, double rho, double df, int d) {
    CopulaModel m;
    m.family = fam;
    m.df = df;
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, d, rho);
    for (int i = 0; i < d; ++i) c(i, i) = 1.0;
    m.corr = CorrelationMatrix{c};
    return m;
}

Eigen::MatrixXd independent_uniforms(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd u(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) u(i, j) = rng.uniform01();
    return u;
}

} // namespace

TEST_CASE("to_pseudo_obs basics") {
    const FinParams p(0.4, 1.2, 2, 2, 1);
    std::vector<FitResult> marg{marginal_of(p)};

    Eigen::MatrixXd at_mu = Eigen::MatrixXd::Constant(12, 1, p.mu());
    const auto u0 = to_pseudo_obs(at_mu, marg);
    for (int i = 0; i < 12; ++i)
        CHECK(u0(i, 0) == Catch::Approx(0.5).margin(1e-10));

    Eigen::MatrixXd mono(12, 1);
    for (int i = 0; i < 12; ++i) mono(i, 0) = -2.0 + 0.4 * i;
    const auto um = to_pseudo_obs(mono, marg);
    for (int i = 1; i < 12; ++i) CHECK(um(i, 0) > um(i - 1, 0));
    CHECK(um.minCoeff() > 0.0);
    CHECK(um.maxCoeff() < 1.0);

    CHECK_THROWS_AS(to_pseudo_obs(mono, {marginal_of(p), marginal_of(p)}),
                    std::domain_error);
    Eigen::MatrixXd tiny = Eigen::MatrixXd::Constant(5, 1, 0.0);
    CHECK_THROWS_AS(to_pseudo_obs(tiny, marg), std::domain_error);
}

TEST_CASE("probability integral transform gives uniform pseudo-observations") {
    const FinParams p(0, 1, 2, 2, 1.4);
    const auto draws = sample(4000, p, 5);
    Eigen::MatrixXd x(4000, 1);
    for (int i = 0; i < 4000; ++i) x(i, 0) = draws[static_cast<std::size_t>(i)];
    const auto u = to_pseudo_obs(x, {marginal_of(p)});
    std::vector<double> uv(u.data(), u.data() + 4000);
    const double ks = oracle::ks_statistic(uv, [](double t) { return t; });
    CHECK(ks < 1.63 / std::sqrt(4000.0));
}

TEST_CASE("gaussian copula on independent uniforms") {
    const auto u = independent_uniforms(5000, 3, 77);
    const auto model = fit_gaussian_copula(u);
    model.corr.validate();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < i; ++j)
            CHECK(std::abs(model.corr.entries(i, j)) < 0.05);
}

TEST_CASE("one-dimensional copulas are trivial") {
    const auto u = independent_uniforms(200, 1, 9);
    const auto g = fit_gaussian_copula(u);
    CHECK(g.loglik == 0.0);
    CHECK(g.corr.dim() == 1);
    const auto t = fit_t_copula(u);
    CHECK(t.loglik == 0.0);
    CHECK(copula_loglik(g, u) == 0.0);
}

TEST_CASE("t-copula recovery at rho=0.5, df=8") {
    const auto gen = make_copula(CopulaFamily::student_t, 0.5, 8.0, 2);
    const Eigen::MatrixXd u = sample_joint(gen, 5000, 314);
    const auto fit = fit_t_copula(u);
    CHECK(fit.corr.entries(0, 1) > 0.45);
    CHECK(fit.corr.entries(0, 1) < 0.55);
    CHECK(fit.df > 5.0);
    CHECK(fit.df < 14.0);
    CHECK(std::isfinite(fit.loglik));
}

TEST_CASE("AIC prefers the generating copula family (d=3)") {
    const auto tgen = make_copula(CopulaFamily::student_t, 0.5, 5.0, 3);
    const Eigen::MatrixXd ut = sample_joint(tgen, 5000, 1001);
    const auto g_on_t = fit_gaussian_copula(ut);
    const auto t_on_t = fit_t_copula(ut);
    CHECK(copula_aic(t_on_t, ut) < copula_aic(g_on_t, ut));
    // gaussian LL never beats the t at its own optimum on t data
    CHECK(copula_loglik(g_on_t, ut) <= copula_loglik(t_on_t, ut));

    const auto ggen = make_copula(CopulaFamily::gaussian, 0.5, 0.0, 3);
    const Eigen::MatrixXd ug = sample_joint(ggen, 5000, 1002);
    const auto g_on_g = fit_gaussian_copula(ug);
    const auto t_on_g = fit_t_copula(ug);
    CHECK(copula_aic(g_on_g, ug) < copula_aic(t_on_g, ug));
}

TEST_CASE("gaussian copula is the df->inf limit of the t copula") {
    const auto gen = make_copula(CopulaFamily::gaussian, 0.4, 0.0, 2);
    const Eigen::MatrixXd u = sample_joint(gen, 800, 5);
    const auto g = fit_gaussian_copula(u);
    auto t_limit = g;
    t_limit.family = CopulaFamily::student_t;
    t_limit.df = 1e6;
    CHECK(copula_loglik(t_limit, u) ==
          Catch::Approx(copula_loglik(g, u)).margin(1e-3));
}

TEST_CASE("copula AIC arithmetic") {
    const auto u = independent_uniforms(100, 5, 3);
    auto model = make_copula(CopulaFamily::gaussian, 0.0, 0.0, 5);
    // identity correlation: LL = 0, k = d(d-1)/2 = 10
    CHECK(copula_loglik(model, u) == Catch::Approx(0.0).margin(1e-12));
    CHECK(copula_aic(model, u) == Catch::Approx(20.0).margin(1e-10));
    model.family = CopulaFamily::student_t;
    model.df = 7.0;
    CHECK(copula_aic(model, u) ==
          Catch::Approx(22.0 - 2.0 * copula_loglik(model, u)).margin(1e-10));
}

TEST_CASE("sample_joint determinism and marginal correctness") {
    const FinParams p(0.1, 1.3, 2, 2, 1.2);
    auto model = make_copula(CopulaFamily::student_t, 0.0, 6.0, 1);
    model.marginals = {marginal_of(p)};
    const auto a = sample_joint(model, 500, 11);
    const auto b = sample_joint(model, 500, 11);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    // d=1: indistinguishable from marginal sampling
    const auto big = sample_joint(model, 10000, 12);
    std::vector<double> xs(big.data(), big.data() + big.rows());
    const double ks =
        oracle::ks_statistic(xs, [&](double t) { return cdf(t, p); });
    CHECK(ks < 1.63 / std::sqrt(10000.0));
}

TEST_CASE("joint sample reproduces rank correlation") {
    const FinParams p(0, 1, 2, 2, 1.3);
    auto model = make_copula(CopulaFamily::gaussian, 0.8, 0.0, 2);
    model.marginals = {marginal_of(p), marginal_of(p)};
    const auto x = sample_joint(model, 5000, 21);
    const auto sp = spearman_matrix(x);
    CHECK(sp.entries(0, 1) > 0.74);
    CHECK(sp.entries(0, 1) < 0.84);
}

TEST_CASE("fit, sample, refit round-trips the correlation") {
    const auto gen = make_copula(CopulaFamily::gaussian, 0.6, 0.0, 2);
    const auto u = sample_joint(gen, 5000, 33);
    const auto fit = fit_gaussian_copula(u);
    const auto u2 = sample_joint(fit, 5000, 34);
    const auto refit = fit_gaussian_copula(u2);
    CHECK(std::abs(refit.corr.entries(0, 1) - fit.corr.entries(0, 1)) < 0.05);
}

TEST_CASE("spearman_matrix properties") {
    Eigen::MatrixXd m(5, 3);
    m << 1, 5, 2.0,
         2, 4, 2.0,
         3, 3, 2.5,
         4, 2, 0.1,
         5, 1, 9.0;
    const auto sp = spearman_matrix(m);
    CHECK(sp.entries(0, 1) == Catch::Approx(-1.0));
    CHECK(sp.entries(1, 0) == Catch::Approx(-1.0));
    for (int i = 0; i < 3; ++i) CHECK(sp.entries(i, i) == 1.0);
    CHECK((sp.entries - sp.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd mono(4, 2);
    mono << 1, 10, 2, 20, 3, 21, 4, 50;
    CHECK(spearman_matrix(mono).entries(0, 1) == Catch::Approx(1.0));

    // spearman is invariant to strictly increasing transforms
    Eigen::MatrixXd expd = m.array().exp();
    const auto sp2 = spearman_matrix(expd);
    CHECK((sp.entries - sp2.entries).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd with_const(4, 2);
    with_const << 1, 7, 2, 7, 3, 7, 4, 7;
    CHECK_THROWS_AS(spearman_matrix(with_const), validation_error);
}

TEST_CASE("nearest PSD projection") {
    Eigen::MatrixXd bad(3, 3);
    bad << 1.0, 0.9, -0.9,
           0.9, 1.0, 0.9,
          -0.9, 0.9, 1.0;
    double residual = 0.0;
    const auto fixed = nearest_psd_correlation(bad, &residual);
    CHECK_NOTHROW(fixed.validate());
    CHECK(residual > 0.0);
    CHECK((fixed.entries - bad).cwiseAbs().maxCoeff() <= residual + 1e-12);

    // idempotent on an already valid correlation
    double r2 = 0.0;
    const auto again = nearest_psd_correlation(fixed.entries, &r2);
    CHECK((again.entries - fixed.entries).cwiseAbs().maxCoeff() < 1e-10);
}
