#pragma once

// The CA database F (patterns x rules) and its centred / standardised forms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "capca/ca_engine.hpp"
#include "capca/errors.hpp"
#include "capca/noise.hpp"

namespace capca {

inline constexpr double kDefaultVarianceEpsilon = 1e-12;

/// Raw database: entry (i, j) is the cardinal of rule col_labels[j] applied
/// to the pattern with cardinal row_labels[i].
struct DataMatrix {
    int pattern_length = 0;
    Eigen::MatrixXd values;
    std::vector<std::uint64_t> row_labels;
    std::vector<int> col_labels;
    std::optional<NoiseModel> noise;

    [[nodiscard]] Eigen::Index rows() const noexcept { return values.rows(); }
    [[nodiscard]] Eigen::Index cols() const noexcept { return values.cols(); }
};

/// Column-centred database with zero-variance columns removed.
/// `means` and `variances` cover every column of the source matrix (aligned
/// with `source_labels`); `values` and `col_labels` cover retained ones only.
struct CenteredMatrix {
    int pattern_length = 0;
    Eigen::MatrixXd values;
    std::vector<std::uint64_t> row_labels;
    std::vector<int> col_labels;
    std::vector<int> source_labels;
    std::vector<double> means;
    std::vector<double> variances;
    std::vector<int> dropped_columns;
    bool standardized = false;

    [[nodiscard]] Eigen::Index rows() const noexcept { return values.rows(); }
    [[nodiscard]] Eigen::Index cols() const noexcept { return values.cols(); }
};

inline std::vector<int> all_rules() {
    std::vector<int> rules(kRuleCount);
    for (int r = 0; r < kRuleCount; ++r) rules[static_cast<std::size_t>(r)] = r;
    return rules;
}

/// Builds F for patterns of length `l`. Rows ascend by pattern cardinal,
/// columns by rule index. Cells are independent, so rows are split across
/// `threads` workers without affecting the result.
inline DataMatrix build_matrix(int l, const std::set<int>& rules,
                               const std::optional<NoiseModel>& noise = std::nullopt,
                               unsigned threads = 1) {
    if (l < 3 || l > kMaxPatternLength) {
        throw DomainError("build_matrix: pattern length " + std::to_string(l) + " outside 3..20");
    }
    if (rules.empty()) throw DomainError("build_matrix: empty rule set");
    if (*rules.begin() < 0 || *rules.rbegin() >= kRuleCount) {
        throw DomainError("build_matrix: rule index outside 0..255");
    }

    DataMatrix F;
    F.pattern_length = l;
    F.noise = noise;
    F.col_labels.assign(rules.begin(), rules.end());
    const auto n = std::size_t{1} << l;
    const auto p = F.col_labels.size();
    F.row_labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) F.row_labels[i] = i;
    F.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));

    std::vector<Rule> decoded;
    decoded.reserve(p);
    for (int r : F.col_labels) decoded.push_back(rule_from_index(r));

    auto fill_rows = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto pattern = BitPattern::from_cardinal(i, l);
            for (std::size_t j = 0; j < p; ++j) {
                auto out = evolve_open(decoded[j], pattern);
                if (noise) out = flip_bits(out, *noise, i, static_cast<std::uint64_t>(decoded[j].index));
                F.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    static_cast<double>(cardinal(out));
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
    if (workers == 1) {
        fill_rows(0, n);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(fill_rows, begin, end);
        }
    }
    return F;
}

/// Subtracts column means and records population variances (divide by n).
/// Columns with variance <= eps_var are dropped and listed.
inline CenteredMatrix center_and_weigh(const DataMatrix& F, double eps_var = kDefaultVarianceEpsilon) {
    if (F.rows() == 0 || F.cols() == 0) throw DomainError("center_and_weigh: empty matrix");
    const double n = static_cast<double>(F.rows());

    CenteredMatrix X;
    X.pattern_length = F.pattern_length;
    X.row_labels = F.row_labels;
    X.source_labels = F.col_labels;
    X.means.resize(static_cast<std::size_t>(F.cols()));
    X.variances.resize(static_cast<std::size_t>(F.cols()));

    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < F.cols(); ++j) {
        const double mean = F.values.col(j).sum() / n;
        const double var = (F.values.col(j).array() - mean).square().sum() / n;
        X.means[static_cast<std::size_t>(j)] = mean;
        X.variances[static_cast<std::size_t>(j)] = var;
        if (var > eps_var) {
            keep.push_back(j);
        } else {
            X.dropped_columns.push_back(F.col_labels[static_cast<std::size_t>(j)]);
        }
    }
    if (keep.empty()) throw DataError("no variance in database");

    X.values.resize(F.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto j = keep[k];
        X.values.col(static_cast<Eigen::Index>(k)) =
            F.values.col(j).array() - X.means[static_cast<std::size_t>(j)];
        X.col_labels.push_back(F.col_labels[static_cast<std::size_t>(j)]);
    }
    return X;
}

/// Scales every column to unit population variance, i.e. applies the
/// diagonal weighted norm diag(1/S_j^2) as a change of variables.
/// Recorded means/variances keep describing the raw data.
inline CenteredMatrix standardize(CenteredMatrix X) {
    const double n = static_cast<double>(X.rows());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double var = X.values.col(j).squaredNorm() / n;
        if (!(var > 0.0)) {
            throw std::logic_error("standardize: zero-variance column " +
                                   std::to_string(X.col_labels[static_cast<std::size_t>(j)]) +
                                   " must be pruned first");
        }
        X.values.col(j) /= std::sqrt(var);
    }
    X.standardized = true;
    return X;
}

}  // namespace capca
