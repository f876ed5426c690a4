#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "finflex/data.hpp"
#include "finflex/fin.hpp"
#include "finflex/rng.hpp"

using namespace finflex;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const auto path =
        (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << body;
    return path;
}

} // namespace

TEST_CASE("load_csv parses, sorts, and validates") {
    const auto p = write_temp("ok.csv",
                              "date,adj_close\n"
                              "2020-01-03,101.5\n"
                              "2020-01-02,100\n");
    const auto ps = load_csv(p);
    CHECK(ps.symbol == "ok");
    REQUIRE(ps.dates.size() == 2);
    CHECK(ps.dates[0] == "2020-01-02");
    CHECK(ps.prices[0] == 100.0);
    CHECK(ps.prices[1] == 101.5);

    CHECK_THROWS_AS(load_csv("/nonexistent/x.csv"), parse_error);
    CHECK_THROWS_AS(load_csv(write_temp("h.csv", "foo,bar\n")), parse_error);
    CHECK_THROWS_WITH(
        load_csv(write_temp("b.csv", "date,adj_close\n2020-01-02,abc\n")),
        Catch::Matchers::ContainsSubstring(":2:"));
    CHECK_THROWS_AS(
        load_csv(write_temp("n.csv",
                            "date,adj_close\n2020-01-02,100\n2020-01-03,-5\n")),
        validation_error);
    CHECK_THROWS_AS(
        load_csv(write_temp("d.csv",
                            "date,adj_close\n2020-01-02,100\n2020-01-02,101\n")),
        validation_error);
}

TEST_CASE("write_csv then load_csv is the identity") {
    PriceSeries ps;
    ps.symbol = "rt";
    Rng rng(6);
    double price = 100.0;
    for (int i = 0; i < 50; ++i) {
        char date[16];
        std::snprintf(date, sizeof date, "2021-03-%02d", i + 1);
        // two-digit day only runs to 31; spill into a second month
        if (i >= 28) std::snprintf(date, sizeof date, "2021-04-%02d", i - 27);
        ps.dates.push_back(date);
        price *= std::exp(0.02 * (rng.uniform01() - 0.5));
        ps.prices.push_back(price);
    }
    const auto path =
        (std::filesystem::temp_directory_path() / "rt.csv").string();
    write_csv(ps, path);
    const auto back = load_csv(path);
    REQUIRE(back.dates == ps.dates);
    for (std::size_t i = 0; i < ps.prices.size(); ++i)
        CHECK(back.prices[i] == Catch::Approx(ps.prices[i]).epsilon(1e-9));
}

TEST_CASE("log_returns definition and scale invariance") {
    PriceSeries ps;
    ps.symbol = "s";
    ps.dates = {"2020-01-01", "2020-01-02", "2020-01-03"};
    ps.prices = {100.0, 110.0, 55.0};
    const auto rs = log_returns(ps);
    REQUIRE(rs.returns.size() == 2);
    CHECK(rs.returns[0] == Catch::Approx(std::log(1.1)).epsilon(1e-12));
    CHECK(rs.returns[1] == Catch::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(rs.dates.front() == "2020-01-02");

    PriceSeries scaled = ps;
    for (double& x : scaled.prices) x *= 7.25;
    const auto rs2 = log_returns(scaled);
    for (std::size_t i = 0; i < rs.returns.size(); ++i)
        CHECK(rs2.returns[i] == Catch::Approx(rs.returns[i]).margin(1e-14));

    PriceSeries flat = ps;
    flat.prices = {5.0, 5.0, 5.0};
    for (double r : log_returns(flat).returns) CHECK(r == 0.0);
}

TEST_CASE("summary_stats matches definitions") {
    ReturnsSeries rs;
    rs.symbol = "s";
    rs.returns = {-1.0, 0.0, 1.0};
    const auto s = summary_stats(rs);
    CHECK(s.avg == Catch::Approx(0.0).margin(1e-15));
    CHECK(s.skewness == Catch::Approx(0.0).margin(1e-15));
    CHECK(s.std == Catch::Approx(1.0).epsilon(1e-12));

    rs.returns = {0.0, 0.0, 0.0, 1.0};
    CHECK(summary_stats(rs).avg == Catch::Approx(0.25));

    // Pearson kurtosis of a standard normal sample sits near 3
    const auto draws = sample(100000, normal_submodel(0.0, 1.0), 44);
    rs.returns = draws;
    const auto sn = summary_stats(rs);
    CHECK(sn.kurtosis > 2.9);
    CHECK(sn.kurtosis < 3.1);

    rs.returns = {2.0, 2.0, 2.0};
    CHECK_THROWS_AS(summary_stats(rs), validation_error);
}

TEST_CASE("align performs an inner join in input order") {
    ReturnsSeries a{"a", {"d1", "d2", "d3"}, {0.1, 0.2, 0.3}};
    ReturnsSeries b{"b", {"d1", "d3", "d4"}, {1.1, 1.3, 1.4}};
    const auto panel = align({a, b});
    REQUIRE(panel.dates == std::vector<std::string>{"d1", "d3"});
    CHECK(panel.symbols == std::vector<std::string>{"a", "b"});
    CHECK(panel.returns(0, 0) == 0.1);
    CHECK(panel.returns(1, 0) == 0.3);
    CHECK(panel.returns(0, 1) == 1.1);
    CHECK(panel.returns(1, 1) == 1.3);

    const auto full = align({a, a});
    CHECK(full.returns.rows() == 3);

    ReturnsSeries c{"c", {"x1", "x2"}, {0.0, 0.0}};
    CHECK_THROWS_AS(align({a, c}), std::domain_error);
    CHECK_THROWS_AS(align({a}), std::domain_error);
}

TEST_CASE("train_test_split ceiling rule") {
    std::vector<double> v10(10);
    std::iota(v10.begin(), v10.end(), 0.0);
    const auto [tr, te] = train_test_split(v10);
    CHECK(tr.size() == 8);
    CHECK(te.size() == 2);
    CHECK(tr.front() == 0.0);
    CHECK(te.back() == 9.0);

    std::vector<double> v5(5);
    const auto [tr5, te5] = train_test_split(v5);
    CHECK(tr5.size() == 4);
    CHECK(te5.size() == 1);

    Eigen::MatrixXd m = Eigen::MatrixXd::Random(10, 2);
    const auto [mtr, mte] = train_test_split(m, 0.3);
    CHECK(mtr.rows() == 7);
    CHECK(mte.rows() == 3);
    CHECK((mtr.row(0) - m.row(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((mte.row(2) - m.row(9)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(train_test_split(v10, 0.95), validation_error);
}
