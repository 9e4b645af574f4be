#include "card/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "card/errors.hpp"

namespace card {

Dataset::Dataset(Matrix x, std::vector<double> y, std::vector<std::uint8_t> t,
                 std::optional<std::vector<double>> oracle_propensity)
    : x_(std::move(x)), y_(std::move(y)), t_(std::move(t)), oracle_propensity_(std::move(oracle_propensity)) {
    const std::size_t n = y_.size();
    if (n == 0) throw data_error("dataset: needs at least one observation");
    if (x_.rows != n || t_.size() != n)
        throw data_error("dataset: x, y and t must have the same number of rows");
    for (std::size_t i = 0; i < n; ++i) {
        if (t_[i] > 1)
            throw data_error("dataset: treatment indicator outside {0,1} at row " + std::to_string(i));
        n_treated_ += t_[i];
    }
    if (oracle_propensity_) {
        if (oracle_propensity_->size() != n)
            throw data_error("dataset: propensity column length mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            const double e = (*oracle_propensity_)[i];
            if (!(e > 0.0 && e < 1.0))
                throw data_error("dataset: propensity outside (0,1) at row " + std::to_string(i));
        }
    }
}

std::vector<std::size_t> Dataset::treated_indices() const {
    std::vector<std::size_t> out;
    out.reserve(n_treated_);
    for (std::size_t i = 0; i < t_.size(); ++i)
        if (t_[i] == 1) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::untreated_indices() const {
    std::vector<std::size_t> out;
    out.reserve(n() - n_treated_);
    for (std::size_t i = 0; i < t_.size(); ++i)
        if (t_[i] == 0) out.push_back(i);
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& col) {
    const std::string s = trim(raw);
    if (s.empty())
        throw data_error("csv: missing value at row " + std::to_string(row) + ", column '" + col + "'");
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw data_error("csv: non-numeric cell '" + s + "' at row " + std::to_string(row) +
                         ", column '" + col + "'");
    return v;
}

} // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw data_error("csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw data_error("csv: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_line(line);
    std::vector<std::string> names(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) names[j] = trim(header[j]);

    auto find_col = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end())
            throw data_error("csv: column '" + name + "' not found in '" + path + "'");
        return static_cast<std::size_t>(it - names.begin());
    };

    const std::size_t y_col = find_col(schema.response);
    const std::size_t t_col = find_col(schema.treatment);
    std::optional<std::size_t> e_col;
    if (schema.propensity) e_col = find_col(*schema.propensity);

    std::vector<std::size_t> x_cols;
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j == y_col || j == t_col) continue;
        if (e_col && j == *e_col) continue;
        x_cols.push_back(j);
    }

    std::vector<double> y, e;
    std::vector<std::uint8_t> t;
    std::vector<double> xdata;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != names.size())
            throw data_error("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(names.size()));
        y.push_back(parse_cell(cells[y_col], row, names[y_col]));
        const double tv = parse_cell(cells[t_col], row, names[t_col]);
        if (tv != 0.0 && tv != 1.0)
            throw data_error("csv: treatment value '" + trim(cells[t_col]) + "' outside {0,1} at row " +
                             std::to_string(row));
        t.push_back(static_cast<std::uint8_t>(tv));
        if (e_col) e.push_back(parse_cell(cells[*e_col], row, names[*e_col]));
        for (const std::size_t j : x_cols) xdata.push_back(parse_cell(cells[j], row, names[j]));
    }
    if (row == 0) throw data_error("csv: no data rows in '" + path + "'");

    Matrix x(row, x_cols.size());
    x.values = std::move(xdata);
    std::optional<std::vector<double>> prop;
    if (e_col) prop = std::move(e);
    return Dataset(std::move(x), std::move(y), std::move(t), std::move(prop));
}

void write_csv(const Dataset& d, const std::string& path, const CsvSchema& schema) {
    std::ofstream out(path);
    if (!out) throw data_error("csv: cannot write '" + path + "'");

    out << schema.response << ',' << schema.treatment;
    if (schema.propensity) out << ',' << *schema.propensity;
    for (std::size_t j = 0; j < d.p(); ++j) out << ",x" << (j + 1);
    out << '\n';

    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t i = 0; i < d.n(); ++i) {
        put(d.y()[i]);
        out << ',' << int(d.t()[i]);
        if (schema.propensity) {
            out << ',';
            put((*d.oracle_propensity())[i]);
        }
        for (std::size_t j = 0; j < d.p(); ++j) {
            out << ',';
            put(d.x().at(i, j));
        }
        out << '\n';
    }
}

KnockoffSplit split_knockoffs(const Dataset& d, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw config_error("split_knockoffs: fraction must lie in (0,1)");
    const std::vector<std::size_t> untreated = d.untreated_indices();
    if (untreated.size() < 2)
        throw data_error("split_knockoffs: needs at least 2 untreated observations");

    const std::size_t n0 = untreated.size();
    const std::size_t k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n0)));
    const std::vector<std::size_t> picks = sample_without_replacement(n0, k, rng);

    std::vector<std::uint8_t> is_knockoff(n0, 0);
    for (const std::size_t j : picks) is_knockoff[j] = 1;

    KnockoffSplit split;
    split.idx_knockoff.reserve(k);
    split.idx_untreated_train.reserve(n0 - k);
    for (std::size_t j = 0; j < n0; ++j) {
        (is_knockoff[j] ? split.idx_knockoff : split.idx_untreated_train).push_back(untreated[j]);
    }
    split.idx_treated = d.treated_indices();
    return split;
}

} // namespace card
