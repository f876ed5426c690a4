#pragma once

// Price ingestion, log returns, summary statistics, panel alignment, and
// chronological train/test splitting.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "finflex/errors.hpp"

namespace finflex {

struct PriceSeries {
    std::string symbol;
    std::vector<std::string> dates; // ISO-8601, strictly increasing
    std::vector<double> prices;

    void validate() const {
        if (dates.size() != prices.size())
            throw validation_error("price series: dates/prices length mismatch");
        if (dates.size() < 2)
            throw validation_error("price series needs at least 2 rows");
        for (std::size_t i = 0; i < dates.size(); ++i) {
            if (!(prices[i] > 0.0))
                throw validation_error("price series: nonpositive price at " +
                                       dates[i]);
            if (i > 0 && dates[i] <= dates[i - 1])
                throw validation_error(
                    "price series: dates not strictly increasing at " +
                    dates[i]);
        }
    }
};

struct ReturnsSeries {
    std::string symbol;
    std::vector<std::string> dates; // date of the later price in each pair
    std::vector<double> returns;
};

struct SummaryStats {
    int n = 0;
    double avg = 0.0;
    double std = 0.0;      // n-1 denominator
    double skewness = 0.0; // m3 / m2^(3/2)
    double kurtosis = 0.0; // m4 / m2^2, Pearson (non-excess)
};

namespace detail {

inline bool iso_date_ok(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

} // namespace detail

/// Parses `date,adj_close` CSV. Rows are sorted by date; duplicates rejected.
/// The symbol is the file stem.
inline PriceSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);
    PriceSeries ps;
    ps.symbol = std::filesystem::path(path).stem().string();
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw parse_error(path + ": empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,adj_close")
        throw parse_error(path + ":1: expected header 'date,adj_close'");
    std::vector<std::pair<std::string, double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": missing comma");
        const std::string date = line.substr(0, comma);
        const std::string val = line.substr(comma + 1);
        if (!detail::iso_date_ok(date))
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": bad date '" + date + "'");
        std::size_t used = 0;
        double price = 0.0;
        try {
            price = std::stod(val, &used);
        } catch (const std::exception&) {
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": bad price '" + val + "'");
        }
        if (used != val.size())
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": trailing junk in price '" + val + "'");
        if (!(price > 0.0))
            throw validation_error(path + ":" + std::to_string(lineno) +
                                   ": price must be positive");
        rows.emplace_back(date, price);
    }
    std::sort(rows.begin(), rows.end());
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first == rows[i - 1].first)
            throw validation_error(path + ": duplicate date " + rows[i].first);
    for (auto& [d, p] : rows) {
        ps.dates.push_back(d);
        ps.prices.push_back(p);
    }
    ps.validate();
    return ps;
}

inline void write_csv(const PriceSeries& ps, const std::string& path) {
    ps.validate();
    std::ofstream out(path);
    if (!out) throw parse_error("cannot write " + path);
    out << "date,adj_close\n";
    char buf[40];
    for (std::size_t i = 0; i < ps.dates.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", ps.prices[i]);
        out << ps.dates[i] << ',' << buf << '\n';
    }
}

inline ReturnsSeries log_returns(const PriceSeries& ps) {
    ps.validate();
    ReturnsSeries rs;
    rs.symbol = ps.symbol;
    rs.dates.assign(ps.dates.begin() + 1, ps.dates.end());
    rs.returns.resize(ps.prices.size() - 1);
    for (std::size_t i = 1; i < ps.prices.size(); ++i)
        rs.returns[i - 1] = std::log(ps.prices[i] / ps.prices[i - 1]);
    return rs;
}

inline SummaryStats summary_stats(const ReturnsSeries& rs) {
    const std::size_t n = rs.returns.size();
    if (n < 2) throw validation_error("summary_stats: need n >= 2");
    SummaryStats s;
    s.n = static_cast<int>(n);
    s.avg = std::accumulate(rs.returns.begin(), rs.returns.end(), 0.0) /
            static_cast<double>(n);
    double m2 = 0, m3 = 0, m4 = 0;
    for (double r : rs.returns) {
        const double d = r - s.avg;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    s.std = std::sqrt(m2 * static_cast<double>(n) / static_cast<double>(n - 1));
    if (m2 <= 0.0)
        throw validation_error("summary_stats: zero variance, higher moments "
                               "undefined");
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
    return s;
}

struct AlignedPanel {
    std::vector<std::string> symbols;
    std::vector<std::string> dates;
    Eigen::MatrixXd returns; // n x d, columns in input order
};

/// Inner join on dates, columns ordered as the input series.
inline AlignedPanel align(const std::vector<ReturnsSeries>& series) {
    if (series.size() < 2) throw std::domain_error("align: need >= 2 series");
    std::map<std::string, int> counts;
    for (const auto& rs : series)
        for (const auto& d : rs.dates) ++counts[d];
    AlignedPanel panel;
    for (const auto& [d, c] : counts)
        if (c == static_cast<int>(series.size())) panel.dates.push_back(d);
    if (panel.dates.empty())
        throw std::domain_error("align: no common dates");
    const int n = static_cast<int>(panel.dates.size());
    const int d = static_cast<int>(series.size());
    panel.returns.resize(n, d);
    for (int j = 0; j < d; ++j) {
        const auto& rs = series[static_cast<std::size_t>(j)];
        panel.symbols.push_back(rs.symbol);
        std::map<std::string, double> by_date;
        for (std::size_t i = 0; i < rs.dates.size(); ++i)
            by_date[rs.dates[i]] = rs.returns[i];
        for (int i = 0; i < n; ++i)
            panel.returns(i, j) = by_date.at(panel.dates[static_cast<std::size_t>(i)]);
    }
    return panel;
}

/// Chronological split: first ceil((1 - test_fraction) * n) rows train.
inline std::size_t train_size(std::size_t n, double test_fraction = 0.2) {
    if (n < 2) throw validation_error("train_test_split: need n >= 2");
    if (!(test_fraction > 0.0) || test_fraction > 0.9)
        throw validation_error("split fraction must lie in (0, 0.9]");
    const auto k = static_cast<std::size_t>(
        std::ceil((1.0 - test_fraction) * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n - 1);
}

inline std::pair<std::vector<double>, std::vector<double>> train_test_split(
    const std::vector<double>& v, double test_fraction = 0.2) {
    const std::size_t k = train_size(v.size(), test_fraction);
    return {std::vector<double>(v.begin(), v.begin() + static_cast<long>(k)),
            std::vector<double>(v.begin() + static_cast<long>(k), v.end())};
}

inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> train_test_split(
    const Eigen::MatrixXd& m, double test_fraction = 0.2) {
    const auto k = static_cast<Eigen::Index>(
        train_size(static_cast<std::size_t>(m.rows()), test_fraction));
    return {m.topRows(k), m.bottomRows(m.rows() - k)};
}

} // namespace finflex
