#pragma once

// JSON documents for fit results and copula models.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "finflex/copula.hpp"
#include "finflex/errors.hpp"
#include "finflex/estimate.hpp"

namespace finflex {

inline nlohmann::json fit_to_json(const FitResult& fit,
                                  std::uint64_t seed = 0) {
    return nlohmann::json{
        {"family", family_name(fit.family)},
        {"params",
         {{"mu", fit.mu},
          {"sigma", fit.sigma},
          {"alpha", fit.alpha},
          {"beta", fit.beta},
          {"kappa", fit.kappa}}},
        {"loglik", fit.loglik},
        {"aic", fit.aic},
        {"grad_norm", fit.grad_norm},
        {"converged", fit.converged},
        {"n_obs", fit.n_obs},
        {"seed", seed},
    };
}

inline FitResult fit_from_json(const nlohmann::json& j) {
    try {
        FitResult fit;
        fit.family = family_from_string(j.at("family").get<std::string>());
        const auto& p = j.at("params");
        fit.mu = p.at("mu").get<double>();
        fit.sigma = p.at("sigma").get<double>();
        fit.alpha = p.at("alpha").get<double>();
        fit.beta = p.at("beta").get<double>();
        fit.kappa = p.at("kappa").get<double>();
        fit.loglik = j.value("loglik", 0.0);
        fit.aic = j.value("aic", 0.0);
        fit.grad_norm = j.value("grad_norm", 0.0);
        fit.converged = j.value("converged", true);
        fit.n_obs = j.value("n_obs", 0);
        fit.k_params = free_param_count(fit.family);
        return fit;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("fit JSON: ") + e.what());
    }
}

inline nlohmann::json copula_to_json(
    const CopulaModel& model, const std::vector<std::string>& marginal_refs) {
    nlohmann::json j{
        {"family", copula_family_name(model.family)},
        {"dim", model.corr.dim()},
        {"loglik", model.loglik},
        {"marginal_refs", marginal_refs},
    };
    if (model.family == CopulaFamily::student_t) j["df"] = model.df;
    std::vector<double> corr;
    const int d = model.corr.dim();
    corr.reserve(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) corr.push_back(model.corr.entries(i, k));
    j["corr"] = corr;
    return j;
}

/// Reads the copula document; marginal_refs come back through `refs` and are
/// resolved by the caller (paths are relative to the document).
inline CopulaModel copula_from_json(const nlohmann::json& j,
                                    std::vector<std::string>* refs = nullptr) {
    try {
        CopulaModel model;
        const std::string fam = j.at("family").get<std::string>();
        if (fam == "gaussian") {
            model.family = CopulaFamily::gaussian;
        } else if (fam == "student_t") {
            model.family = CopulaFamily::student_t;
            model.df = j.at("df").get<double>();
        } else {
            throw parse_error("copula JSON: unknown family " + fam);
        }
        const int d = j.at("dim").get<int>();
        const auto corr = j.at("corr").get<std::vector<double>>();
        if (static_cast<int>(corr.size()) != d * d)
            throw parse_error("copula JSON: corr size does not match dim");
        model.corr.entries.resize(d, d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
                model.corr.entries(i, k) =
                    corr[static_cast<std::size_t>(i * d + k)];
        model.corr.validate();
        model.loglik = j.value("loglik", 0.0);
        if (refs) *refs = j.value("marginal_refs", std::vector<std::string>{});
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("copula JSON: ") + e.what());
    }
}

} // namespace finflex
