#pragma once

// CSV / JSON encoding of databases. Numbers are written in the shortest form
// that parses back to the same double.

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "capca/ca_engine.hpp"
#include "capca/dataset.hpp"
#include "capca/errors.hpp"

namespace capca {

inline std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '+')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DomainError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') cells.back().pop_back();
    return cells;
}

/// Patterns x rules table: header "pattern,<rule>,...", then one row per
/// pattern with the pattern bits as its first cell.
inline void write_matrix_csv(std::ostream& os, int pattern_length, const std::vector<std::uint64_t>& rows,
                             const std::vector<int>& cols, const Eigen::MatrixXd& values) {
    os << "pattern";
    for (int c : cols) os << ',' << c;
    os << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        os << BitPattern::from_cardinal(rows[static_cast<std::size_t>(i)], pattern_length).to_string();
        for (Eigen::Index j = 0; j < values.cols(); ++j) os << ',' << format_number(values(i, j));
        os << '\n';
    }
}

inline void write_csv(std::ostream& os, const DataMatrix& F) {
    write_matrix_csv(os, F.pattern_length, F.row_labels, F.col_labels, F.values);
}

inline void write_csv(std::ostream& os, const CenteredMatrix& X) {
    write_matrix_csv(os, X.pattern_length, X.row_labels, X.col_labels, X.values);
}

/// Result of reading back a patterns x rules CSV.
struct MatrixCsv {
    std::vector<std::string> patterns;
    std::vector<int> rules;
    Eigen::MatrixXd values;
};

inline MatrixCsv read_matrix_csv(std::istream& is) {
    MatrixCsv out;
    std::string line;
    while (std::getline(is, line) && (line.empty() || line.front() == '#')) {}
    const auto header = split_csv_line(line);
    if (header.empty() || header.front() != "pattern") throw DomainError("matrix csv: missing 'pattern' header");
    for (std::size_t k = 1; k < header.size(); ++k) out.rules.push_back(static_cast<int>(parse_number(header[k])));

    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line.front() == '#') continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw DomainError("matrix csv: ragged row");
        out.patterns.push_back(cells.front());
        std::vector<double> row;
        for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(parse_number(cells[k]));
        rows.push_back(std::move(row));
    }
    out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.rules.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return out;
}

inline nlohmann::json to_json(const DataMatrix& F) {
    nlohmann::json j;
    j["l"] = F.pattern_length;
    if (F.noise) {
        j["noise_p"] = F.noise->p();
        j["seed"] = F.noise->seed();
    } else {
        j["noise_p"] = nullptr;
        j["seed"] = nullptr;
    }
    j["rules"] = F.col_labels;
    auto& patterns = j["patterns"] = nlohmann::json::array();
    auto& values = j["values"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < F.rows(); ++i) {
        patterns.push_back(
            BitPattern::from_cardinal(F.row_labels[static_cast<std::size_t>(i)], F.pattern_length).to_string());
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(F.cols()));
        for (Eigen::Index c = 0; c < F.cols(); ++c) row.push_back(F.values(i, c));
        values.push_back(std::move(row));
    }
    return j;
}

}  // namespace capca
