// finflex: fit, compare, copula, plotdata, simulate.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "finflex/copula.hpp"
#include "finflex/data.hpp"
#include "finflex/errors.hpp"
#include "finflex/estimate.hpp"
#include "finflex/fin.hpp"
#include "finflex/serialize.hpp"

namespace fs = std::filesystem;
using namespace finflex;

namespace {

bool log_enabled() {
    const char* v = std::getenv("FINFLEX_LOG");
    return v && *v && std::string(v) != "0";
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[finflex] " << msg << "\n";
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

// smaller families first so later fits can warm-start from nested optima
const std::vector<Family> kNestingOrder{Family::normal, Family::laplace,
                                        Family::ep,     Family::ftn,
                                        Family::btn,    Family::fin};

std::vector<Family> parse_families(const std::vector<std::string>& names) {
    std::vector<Family> fams;
    for (const auto& n : names) fams.push_back(family_from_string(n));
    return fams;
}

struct PipelineFit {
    FitResult fit;
    double oos_ll = 0.0;
    std::string symbol;
};

PipelineFit run_fit_pipeline(const std::string& csv, Family family,
                             double split, const FitConfig& cfg,
                             const std::vector<FinParams>& warm = {}) {
    const PriceSeries ps = load_csv(csv);
    const ReturnsSeries rs = log_returns(ps);
    const auto [train, test] = train_test_split(rs.returns, split);
    log_line("fit " + ps.symbol + " family=" + family_name(family) +
             " train=" + std::to_string(train.size()) +
             " test=" + std::to_string(test.size()));
    PipelineFit out;
    out.symbol = ps.symbol;
    out.fit = fit_mle(train, cfg, family, warm);
    out.oos_ll = out_of_sample_ll(out.fit, test);
    return out;
}

std::string write_fit_json(const PipelineFit& pf, const std::string& out_dir,
                           std::uint64_t seed) {
    auto j = fit_to_json(pf.fit, seed);
    j["oos_ll"] = pf.oos_ll;
    j["symbol"] = pf.symbol;
    const fs::path path = fs::path(out_dir) /
                          (pf.symbol + "." + family_name(pf.fit.family) +
                           ".fit.json");
    std::ofstream out(path);
    if (!out) throw parse_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
    return path.string();
}

void print_fit(const PipelineFit& pf) {
    const auto& f = pf.fit;
    std::printf("%-8s %-7s mu=%-12s sigma=%-12s alpha=%-12s beta=%-12s "
                "kappa=%-12s\n",
                pf.symbol.c_str(), family_name(f.family),
                fmt(f.mu).c_str(), fmt(f.sigma).c_str(), fmt(f.alpha).c_str(),
                fmt(f.beta).c_str(), fmt(f.kappa).c_str());
    std::printf("%-8s %-7s loglik=%s aic=%s oos_ll=%s converged=%s "
                "grad_norm=%s\n",
                "", "", fmt(f.loglik).c_str(), fmt(f.aic).c_str(),
                fmt(pf.oos_ll).c_str(), f.converged ? "true" : "false",
                fmt(f.grad_norm).c_str());
}

int cmd_fit(const std::string& csv, const std::string& family_name_s,
            double split, const std::string& out_dir, double tol,
            std::uint64_t seed) {
    FitConfig cfg;
    cfg.grad_tol = tol;
    const Family fam = family_from_string(family_name_s);
    const PipelineFit pf = run_fit_pipeline(csv, fam, split, cfg);
    print_fit(pf);
    fs::create_directories(out_dir);
    const auto path = write_fit_json(pf, out_dir, seed);
    log_line("wrote " + path);
    if (!pf.fit.converged)
        throw convergence_error("fit did not converge (grad_norm=" +
                                fmt(pf.fit.grad_norm) + ")");
    return 0;
}

int cmd_compare(const std::string& csv, const std::vector<std::string>& fams,
                double split, const std::string& out_dir, double tol,
                std::uint64_t seed) {
    if (fams.size() < 2)
        throw validation_error("compare: need at least 2 families");
    std::vector<Family> requested = parse_families(fams);
    FitConfig cfg;
    cfg.grad_tol = tol;

    const PriceSeries ps = load_csv(csv);
    const ReturnsSeries rs = log_returns(ps);
    const auto [train, test] = train_test_split(rs.returns, split);

    std::vector<FitResult> fits;
    std::vector<FinParams> warm;
    std::vector<PipelineFit> pipeline_fits;
    for (Family fam : kNestingOrder) {
        if (std::find(requested.begin(), requested.end(), fam) ==
            requested.end())
            continue;
        FitResult fit = fit_mle(train, cfg, fam, warm);
        warm.push_back(fit.params());
        fits.push_back(fit);
        PipelineFit pf;
        pf.fit = fit;
        pf.oos_ll = out_of_sample_ll(fit, test);
        pf.symbol = ps.symbol;
        pipeline_fits.push_back(pf);
    }

    // nested-model LL monotonicity is a warning check, not a failure
    for (const auto& a : fits) {
        for (const auto& b : fits) {
            const bool nested =
                (b.family == Family::fin && a.family != Family::fin) ||
                (b.family == Family::btn &&
                 (a.family == Family::ep || a.family == Family::normal ||
                  a.family == Family::laplace)) ||
                (b.family == Family::ftn && a.family == Family::normal) ||
                (b.family == Family::ep &&
                 (a.family == Family::normal || a.family == Family::laplace));
            if (nested && b.loglik < a.loglik - 1e-6)
                std::cerr << "warning: loglik(" << family_name(b.family)
                          << ") < loglik(" << family_name(a.family)
                          << ") despite nesting\n";
        }
    }

    const auto rows = compare_models(fits, test);
    std::printf("%-8s %16s %16s\n", "family", "aic", "oos_ll");
    for (const auto& r : rows)
        std::printf("%-8s %16s %16s\n", r.family.c_str(), fmt(r.aic).c_str(),
                    fmt(r.oos_ll).c_str());

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        for (const auto& pf : pipeline_fits) write_fit_json(pf, out_dir, seed);
    }
    return 0;
}

int cmd_copula(const std::vector<std::string>& csvs,
               const std::string& copula_family,
               const std::vector<std::string>& marginal_fams, double split,
               const std::string& out_dir, double tol, std::uint64_t seed) {
    if (csvs.size() < 2) throw validation_error("copula: need >= 2 CSVs");
    std::vector<Family> requested =
        marginal_fams.empty()
            ? kNestingOrder
            : parse_families(marginal_fams);
    FitConfig cfg;
    cfg.grad_tol = tol;

    fs::create_directories(out_dir);
    std::vector<ReturnsSeries> all_returns;
    std::vector<FitResult> marginals;
    std::vector<std::string> marginal_refs;
    for (const auto& csv : csvs) {
        const PriceSeries ps = load_csv(csv);
        ReturnsSeries rs = log_returns(ps);
        // best marginal by AIC among the requested families, warm-starting
        // along the nesting chain
        std::vector<FinParams> warm;
        FitResult best;
        bool have = false;
        for (Family fam : kNestingOrder) {
            if (std::find(requested.begin(), requested.end(), fam) ==
                requested.end())
                continue;
            FitResult fit = fit_mle(rs.returns, cfg, fam, warm);
            warm.push_back(fit.params());
            if (!have || fit.aic < best.aic) {
                best = fit;
                have = true;
            }
        }
        log_line("marginal " + ps.symbol + " -> " + std::string(family_name(best.family)) +
                 " aic=" + fmt(best.aic));
        PipelineFit pf;
        pf.fit = best;
        pf.oos_ll = best.loglik;
        pf.symbol = ps.symbol;
        marginal_refs.push_back(
            fs::path(write_fit_json(pf, out_dir, seed)).filename().string());
        marginals.push_back(best);
        all_returns.push_back(std::move(rs));
    }

    const AlignedPanel panel = align(all_returns);
    if (panel.returns.rows() < 10)
        throw validation_error("copula: aligned panel too short");
    (void)split;

    // spearman matrix CSV
    {
        const auto sp = spearman_matrix(panel.returns);
        const fs::path path = fs::path(out_dir) / "spearman.csv";
        std::ofstream out(path);
        for (std::size_t j = 0; j < panel.symbols.size(); ++j)
            out << (j ? "," : "") << panel.symbols[j];
        out << "\n";
        for (int i = 0; i < sp.dim(); ++i) {
            for (int j = 0; j < sp.dim(); ++j)
                out << (j ? "," : "") << fmt(sp.entries(i, j));
            out << "\n";
        }
        log_line("wrote " + path.string());
    }

    const Eigen::MatrixXd u = to_pseudo_obs(panel.returns, marginals);
    std::vector<std::pair<std::string, CopulaModel>> fitted;
    if (copula_family == "gaussian" || copula_family == "both")
        fitted.emplace_back("gaussian", fit_gaussian_copula(u));
    if (copula_family == "t" || copula_family == "both")
        fitted.emplace_back("student_t", fit_t_copula(u));
    if (fitted.empty())
        throw validation_error("copula: family must be t, gaussian, or both");

    std::printf("%-10s %16s %16s %10s\n", "copula", "loglik", "aic", "df");
    const CopulaModel* best = nullptr;
    double best_aic = 0.0;
    for (auto& [name, model] : fitted) {
        model.marginals = marginals;
        const double a = copula_aic(model, u);
        std::printf("%-10s %16s %16s %10s\n", name.c_str(),
                    fmt(model.loglik).c_str(), fmt(a).c_str(),
                    model.family == CopulaFamily::student_t ? fmt(model.df).c_str()
                                                            : "-");
        const fs::path path = fs::path(out_dir) / ("copula." + name + ".json");
        std::ofstream out(path);
        out << copula_to_json(model, marginal_refs).dump(2) << "\n";
        log_line("wrote " + path.string());
        if (!best || a < best_aic) {
            best = &model;
            best_aic = a;
        }
    }
    if (fitted.size() > 1)
        std::printf("best by AIC: %s\n",
                    copula_family_name(best->family).c_str());
    return 0;
}

FinParams params_from_spec(const std::string& params_csv,
                           const std::string& fit_json) {
    if (!fit_json.empty()) {
        std::ifstream in(fit_json);
        if (!in) throw parse_error("cannot open " + fit_json);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(fit_json + ": " + e.what());
        }
        return fit_from_json(j).params();
    }
    std::vector<double> vals;
    std::stringstream ss(params_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw parse_error("bad --params component '" + tok + "'");
        }
    }
    if (vals.size() != 5)
        throw parse_error("--params needs mu,sigma,alpha,beta,kappa");
    return FinParams(vals[0], vals[1], vals[2], vals[3], vals[4]);
}

int cmd_plotdata(const std::string& what, const std::string& params_csv,
                 const std::string& fit_json, double lo, double hi,
                 int gridsize, const std::string& out_path) {
    if (gridsize < 2) throw validation_error("plotdata: gridsize must be >= 2");
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw parse_error("cannot write " + out_path);
        os = &file;
    }
    if (what == "kurtosis-surface") {
        *os << "alpha,beta,excess_kurtosis\n";
        for (int i = 0; i < gridsize; ++i) {
            const double a = lo + (hi - lo) * i / (gridsize - 1);
            for (int j = 0; j < gridsize; ++j) {
                const double b = lo + (hi - lo) * j / (gridsize - 1);
                const auto st = shape_stats(FinParams(0, 1, a, b, 1));
                *os << fmt(a) << ',' << fmt(b) << ','
                    << fmt(st.excess_kurtosis) << "\n";
            }
        }
        return 0;
    }
    const FinParams p = params_from_spec(params_csv, fit_json);
    *os << "x,value\n";
    for (int i = 0; i < gridsize; ++i) {
        const double x = lo + (hi - lo) * i / (gridsize - 1);
        double v = 0.0;
        if (what == "pdf") v = pdf(x, p);
        else if (what == "cdf") v = cdf(x, p);
        else if (what == "kernel") v = kernel(p.standardize(x), p);
        else if (what == "dkernel") v = derivative_kernel(p.standardize(x), p);
        else throw validation_error("plotdata: unknown --what " + what);
        *os << fmt(x) << ',' << fmt(v) << "\n";
    }
    return 0;
}

int cmd_simulate(const std::string& model_json, int n, std::uint64_t seed,
                 const std::string& out_path) {
    if (n < 1) throw validation_error("simulate: n must be positive");
    std::ifstream in(model_json);
    if (!in) throw parse_error("cannot open " + model_json);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(model_json + ": " + e.what());
    }
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw parse_error("cannot write " + out_path);
        os = &file;
    }
    const std::string fam = j.value("family", "");
    if (fam == "gaussian" || fam == "student_t") {
        std::vector<std::string> refs;
        CopulaModel model = copula_from_json(j, &refs);
        if (static_cast<int>(refs.size()) != model.corr.dim())
            throw validation_error("simulate: marginal_refs must match dim");
        const fs::path base = fs::path(model_json).parent_path();
        std::vector<std::string> names;
        for (const auto& ref : refs) {
            std::ifstream min(base / ref);
            if (!min)
                throw parse_error("cannot open marginal " + (base / ref).string());
            nlohmann::json mj;
            try {
                min >> mj;
            } catch (const nlohmann::json::exception& e) {
                throw parse_error(ref + ": " + e.what());
            }
            model.marginals.push_back(fit_from_json(mj));
            names.push_back(mj.value("symbol", fs::path(ref).stem().string()));
        }
        const Eigen::MatrixXd x = sample_joint(model, n, seed);
        for (std::size_t c = 0; c < names.size(); ++c)
            *os << (c ? "," : "") << names[c];
        *os << "\n";
        for (int i = 0; i < n; ++i) {
            for (int c = 0; c < x.cols(); ++c)
                *os << (c ? "," : "") << fmt(x(i, c));
            *os << "\n";
        }
        return 0;
    }
    const FinParams p = fit_from_json(j).params();
    const auto draws = sample(static_cast<std::size_t>(n), p, seed);
    *os << "value\n";
    for (double x : draws) *os << fmt(x) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FIN distribution toolkit: marginal fitting, model "
                 "comparison, copulas, and figure data"};
    app.require_subcommand(1);

    std::string csv, family = "fin", out_dir = ".", what = "pdf";
    std::string params_csv, fit_json, model_json, out_path;
    std::vector<std::string> families, csvs;
    double split = 0.2, tol = 1e-6, lo = -5.0, hi = 5.0;
    int gridsize = 200, n = 1000;
    std::uint64_t seed = 0;

    auto* fit = app.add_subcommand("fit", "fit one family to a price CSV");
    fit->add_option("csv", csv, "price CSV (date,adj_close)")->required();
    fit->add_option("--family", family, "fin|ftn|btn|ep|normal|laplace");
    fit->add_option("--split", split, "test fraction (default 0.2)");
    fit->add_option("--out", out_dir, "output directory");
    fit->add_option("--tol", tol, "gradient tolerance");
    fit->add_option("--seed", seed, "seed recorded in the report");

    auto* cmp = app.add_subcommand("compare", "rank families by AIC");
    cmp->add_option("csv", csv, "price CSV")->required();
    cmp->add_option("--family", families, "families to compare (repeatable)")
        ->required();
    cmp->add_option("--split", split, "test fraction");
    cmp->add_option("--out", out_dir, "directory for fit JSONs");
    cmp->add_option("--tol", tol, "gradient tolerance");
    cmp->add_option("--seed", seed, "seed recorded in reports");

    auto* cop = app.add_subcommand("copula", "fit copulas over FIN marginals");
    cop->add_option("csvs", csvs, "price CSVs (>= 2)")->required();
    std::string cop_family = "both";
    cop->add_option("--family", cop_family, "t|gaussian|both");
    cop->add_option("--marginal-family", families,
                    "candidate marginal families (default: all)");
    cop->add_option("--split", split, "test fraction");
    cop->add_option("--out", out_dir, "output directory");
    cop->add_option("--tol", tol, "gradient tolerance");
    cop->add_option("--seed", seed, "seed recorded in reports");

    auto* plot = app.add_subcommand("plotdata", "emit curve/grid CSV");
    plot->add_option("--what", what,
                     "pdf|cdf|kernel|dkernel|kurtosis-surface");
    plot->add_option("--params", params_csv, "mu,sigma,alpha,beta,kappa");
    plot->add_option("--fit", fit_json, "fit.json produced by fit");
    plot->add_option("--lo", lo, "grid lower bound");
    plot->add_option("--hi", hi, "grid upper bound");
    plot->add_option("--grid", gridsize, "grid size");
    plot->add_option("--out", out_path, "output CSV (default stdout)");

    auto* sim = app.add_subcommand("simulate", "sample from a model JSON");
    sim->add_option("model", model_json, "fit.json or copula JSON")->required();
    sim->add_option("-n,--n", n, "number of draws");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--out", out_path, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
        if (*fit) return cmd_fit(csv, family, split, out_dir, tol, seed);
        if (*cmp)
            return cmd_compare(csv, families, split, out_dir, tol, seed);
        if (*cop)
            return cmd_copula(csvs, cop_family, families, split, out_dir, tol,
                              seed);
        if (*plot)
            return cmd_plotdata(what, params_csv, fit_json, lo, hi, gridsize,
                                out_path);
        if (*sim) return cmd_simulate(model_json, n, seed, out_path);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const convergence_error& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 4;
    } catch (const std::domain_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
