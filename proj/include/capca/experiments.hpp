#pragma once

// End-to-end mining runs, reference tables and comparison reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capca/dataset.hpp"
#include "capca/errors.hpp"
#include "capca/io.hpp"
#include "capca/spectral.hpp"

namespace capca {

/// Absolute tolerance on sum(lambda) == retained column count.
inline constexpr double kTraceTolerance = 1e-6;
/// Largest admissible lambda_{k+1} / lambda_1 just past the component count.
inline constexpr double kTailTolerance = 1e-12;
/// The noiseless database has rank 7 for every pattern length tried.
inline constexpr int kNoiselessRank = 7;

struct ExperimentConfig {
    int l = 4;
    std::optional<double> noise_p;
    std::uint64_t seed = 0;
    std::set<int> rules = full_rule_set();
    double tau_rel = kDefaultComponentTau;
    double eps_var = kDefaultVarianceEpsilon;
    unsigned threads = 1;

    static std::set<int> full_rule_set() {
        const auto v = all_rules();
        return {v.begin(), v.end()};
    }

    [[nodiscard]] bool noisy() const noexcept { return noise_p && *noise_p > 0.0; }
    [[nodiscard]] bool full_rules() const noexcept { return rules.size() == static_cast<std::size_t>(kRuleCount); }

    void validate() const {
        if (l < 3 || l > kMaxPatternLength) throw DomainError("config: l must lie in 3..20");
        if (noise_p && !(*noise_p >= 0.0 && *noise_p <= 1.0)) throw DomainError("config: noise probability outside [0, 1]");
        if (rules.empty()) throw DomainError("config: empty rule set");
        if (*rules.begin() < 0 || *rules.rbegin() >= kRuleCount) throw DomainError("config: rule index outside 0..255");
        if (!(tau_rel > 0.0 && tau_rel < 1.0)) throw DomainError("config: tau_rel must lie in (0, 1)");
        if (!(eps_var >= 0.0)) throw DomainError("config: eps_var must be non-negative");
    }
};

enum class ReferenceId { NoiselessTop7, NoisyL5, NoisyL6 };

inline std::string to_string(ReferenceId id) {
    switch (id) {
        case ReferenceId::NoiselessTop7: return "noiseless-top7";
        case ReferenceId::NoisyL5: return "noisy-l5";
        case ReferenceId::NoisyL6: return "noisy-l6";
    }
    return "?";
}

inline ReferenceId parse_reference_id(const std::string& name) {
    if (name == "noiseless-top7" || name == "original") return ReferenceId::NoiselessTop7;
    if (name == "noisy-l5") return ReferenceId::NoisyL5;
    if (name == "noisy-l6") return ReferenceId::NoisyL6;
    throw DomainError("unknown reference table '" + name + "'");
}

inline std::string reference_file_name(ReferenceId id) {
    switch (id) {
        case ReferenceId::NoiselessTop7: return "noiseless_top7.csv";
        case ReferenceId::NoisyL5: return "noisy_l5.csv";
        case ReferenceId::NoisyL6: return "noisy_l6.csv";
    }
    return {};
}

/// Published eigenvalues. For noiseless-top7 rows are pattern lengths and
/// columns ranks 1..7; for the noisy tables rows are ranks and columns flip
/// probabilities.
struct ReferenceTable {
    ReferenceId id = ReferenceId::NoiselessTop7;
    std::optional<int> pattern_length;
    std::vector<int> row_keys;
    std::vector<double> column_keys;
    std::vector<std::vector<double>> values;

    [[nodiscard]] std::optional<std::size_t> row_of(int key) const {
        const auto it = std::find(row_keys.begin(), row_keys.end(), key);
        if (it == row_keys.end()) return std::nullopt;
        return static_cast<std::size_t>(it - row_keys.begin());
    }

    [[nodiscard]] std::optional<std::size_t> column_of(double key) const {
        for (std::size_t c = 0; c < column_keys.size(); ++c) {
            if (std::abs(column_keys[c] - key) < 1e-9) return c;
        }
        return std::nullopt;
    }
};

inline ReferenceTable parse_reference(std::istream& is) {
    ReferenceTable table;
    std::map<std::string, std::string> meta;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            auto key = line.substr(1, colon - 1);
            auto value = line.substr(colon + 1);
            key.erase(0, key.find_first_not_of(' '));
            value.erase(0, value.find_first_not_of(' '));
            meta[key] = value;
            continue;
        }
        const auto cells = split_csv_line(line);
        if (!header_seen) {
            for (std::size_t k = 1; k < cells.size(); ++k) table.column_keys.push_back(parse_number(cells[k]));
            header_seen = true;
            continue;
        }
        if (cells.size() != table.column_keys.size() + 1) throw DomainError("reference table: ragged row");
        table.row_keys.push_back(static_cast<int>(parse_number(cells[0])));
        std::vector<double> row;
        for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(parse_number(cells[k]));
        table.values.push_back(std::move(row));
    }
    if (!meta.count("id")) throw DomainError("reference table: missing '# id:' line");
    table.id = parse_reference_id(meta["id"]);
    if (meta.count("l")) table.pattern_length = static_cast<int>(parse_number(meta["l"]));
    if (table.id != ReferenceId::NoiselessTop7 && !table.pattern_length) {
        throw DomainError("reference table: noisy table needs '# l:' line");
    }
    return table;
}

inline ReferenceTable load_reference(ReferenceId id, const std::filesystem::path& data_dir) {
    const auto path = data_dir / reference_file_name(id);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open reference table " + path.string());
    auto table = parse_reference(in);
    if (table.id != id) throw DomainError("reference file " + path.string() + " holds a different table");
    return table;
}

/// A pass/fail judgement and the tolerance it was judged against.
struct Verdict {
    std::string name;
    bool pass = false;
    double tolerance = 0.0;
    std::string detail;
};

struct EntryDelta {
    int rank = 0;
    double expected = 0.0;
    double actual = 0.0;
    double tolerance = 0.0;

    [[nodiscard]] double delta() const noexcept { return actual - expected; }
    [[nodiscard]] bool pass() const noexcept { return std::abs(delta()) <= tolerance; }
};

struct RunReport {
    ExperimentConfig config;
    Spectrum spectrum;
    SymMatrix correlation;
    int component_count = 0;
    int retained_columns = 0;
    std::vector<int> dropped_columns;
    double trace = 0.0;
    std::optional<ReferenceId> reference;
    std::vector<EntryDelta> deltas;
    std::vector<Verdict> verdicts;
    std::string note;

    [[nodiscard]] bool passed() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    }

    /// lambda_{k+1} / lambda_1 for k = component_count, or 0 if the spectrum ends there.
    [[nodiscard]] double tail_ratio() const {
        const auto k = static_cast<Eigen::Index>(component_count);
        if (k >= spectrum.order() || spectrum.eigenvalues(0) <= 0.0) return 0.0;
        return std::abs(spectrum.eigenvalues(k)) / spectrum.eigenvalues(0);
    }
};

/// build -> centre/weigh -> standardise -> correlation -> eigensolve -> count.
inline RunReport run(const ExperimentConfig& config) {
    config.validate();
    std::optional<NoiseModel> noise;
    if (config.noisy()) noise.emplace(*config.noise_p, config.seed);

    const auto F = build_matrix(config.l, config.rules, noise, config.threads);
    const auto X = standardize(center_and_weigh(F, config.eps_var));

    RunReport report;
    report.config = config;
    report.correlation = covariance(X);
    report.spectrum = eig_sym(report.correlation);
    report.component_count = count_components(report.spectrum, config.tau_rel);
    report.retained_columns = static_cast<int>(X.cols());
    report.dropped_columns = X.dropped_columns;
    report.trace = report.spectrum.sum();
    return report;
}

/// Component count a noisy run must show: the centred data has rank at most
/// n - 1 and at most the number of retained columns.
inline int expected_noisy_components(int l, int retained) {
    const long long rows_bound = (1LL << l) - 1;
    return static_cast<int>(std::min<long long>(rows_bound, retained));
}

namespace detail {

inline std::string sci(double v) {
    std::ostringstream os;
    os.precision(4);
    os << std::scientific << v;
    return os.str();
}

inline void add_trace_verdict(RunReport& r) {
    const double gap = std::abs(r.trace - r.retained_columns);
    r.verdicts.push_back({"trace equals retained column count", gap <= kTraceTolerance, kTraceTolerance,
                          "sum=" + format_number(r.trace) + " retained=" + std::to_string(r.retained_columns)});
}

inline void add_tail_verdict(RunReport& r) {
    const double tail = r.tail_ratio();
    r.verdicts.push_back({"tail lambda_{k+1}/lambda_1 below tolerance", tail < kTailTolerance, kTailTolerance,
                          "ratio=" + sci(tail)});
}

}  // namespace detail

/// Judges a run against a reference table. Noiseless tables are compared
/// entry by entry; the noisy tables are single unseeded realizations, so
/// only their structure (component count, zero tail, trace) is checked.
inline RunReport compare(RunReport report, const ReferenceTable& ref, double tol) {
    const auto& cfg = report.config;
    if (!cfg.full_rules()) throw DomainError("compare: reference tables cover all 256 rules");

    report.reference = ref.id;
    if (ref.id == ReferenceId::NoiselessTop7) {
        if (cfg.noisy()) throw DomainError("compare: noisy run against a noiseless reference");
        const auto row = ref.row_of(cfg.l);
        if (!row) throw DomainError("compare: reference has no row for l=" + std::to_string(cfg.l));
        for (std::size_t c = 0; c < ref.column_keys.size(); ++c) {
            const auto rank = static_cast<int>(ref.column_keys[c]);
            if (rank < 1 || rank > report.spectrum.order()) throw DomainError("compare: reference rank beyond spectrum");
            EntryDelta d{rank, ref.values[*row][c], report.spectrum.eigenvalues(rank - 1), tol};
            report.deltas.push_back(d);
            report.verdicts.push_back({"lambda_" + std::to_string(rank), d.pass(), tol,
                                       "expected=" + format_number(d.expected) + " actual=" + format_number(d.actual) +
                                           " delta=" + detail::sci(d.delta())});
        }
        report.verdicts.push_back({"component count", report.component_count == kNoiselessRank, cfg.tau_rel,
                                   "count=" + std::to_string(report.component_count) +
                                       " expected=" + std::to_string(kNoiselessRank) + " (tolerance is tau_rel)"});
        detail::add_trace_verdict(report);
        return report;
    }

    if (!cfg.noisy()) throw DomainError("compare: noiseless run against a noisy reference");
    if (!ref.pattern_length || *ref.pattern_length != cfg.l) {
        throw DomainError("compare: run has l=" + std::to_string(cfg.l) + " but " + to_string(ref.id) + " has l=" +
                          (ref.pattern_length ? std::to_string(*ref.pattern_length) : std::string("?")));
    }
    if (!ref.column_of(*cfg.noise_p)) {
        throw DomainError("compare: reference has no column for p=" + format_number(*cfg.noise_p));
    }
    const int expected = expected_noisy_components(cfg.l, report.retained_columns);
    const bool rows_bind = expected == (1 << cfg.l) - 1;
    report.verdicts.push_back({"component count", report.component_count == expected, cfg.tau_rel,
                               "count=" + std::to_string(report.component_count) + " expected=" +
                                   std::to_string(expected) + (rows_bind ? " (bound: 2^l-1)" : " (bound: retained columns)")});
    detail::add_tail_verdict(report);
    detail::add_trace_verdict(report);
    report.note = "noisy reference values are single unseeded realizations; structure is compared, not entries";
    return report;
}

struct RankDelta {
    int from_l = 0;
    int to_l = 0;
    int rank = 0;
    double delta = 0.0;
};

struct SweepReport {
    std::vector<RunReport> runs;
    std::vector<RankDelta> deltas;
    std::vector<Verdict> verdicts;

    [[nodiscard]] bool passed() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    }
};

/// One noiseless-style run per pattern length, with the per-rank eigenvalue
/// changes between consecutive lengths (ranks 1..7).
inline SweepReport convergence_sweep(std::vector<int> l_values, const ExperimentConfig& base) {
    if (l_values.empty()) throw DomainError("convergence_sweep: no pattern lengths");
    std::sort(l_values.begin(), l_values.end());
    l_values.erase(std::unique(l_values.begin(), l_values.end()), l_values.end());
    if (l_values.front() < 4 || l_values.back() > 12) throw DomainError("convergence_sweep: l values must lie in 4..12");

    SweepReport sweep;
    for (int l : l_values) {
        auto cfg = base;
        cfg.l = l;
        sweep.runs.push_back(run(cfg));
    }
    if (sweep.runs.size() < 2) return sweep;

    const int ranks = static_cast<int>(std::min<Eigen::Index>(kNoiselessRank, sweep.runs.front().spectrum.order()));
    bool shrinking = true;
    bool lambda1_rising = true;
    std::string worst;
    for (std::size_t k = 1; k < sweep.runs.size(); ++k) {
        const auto& prev = sweep.runs[k - 1];
        const auto& cur = sweep.runs[k];
        if (cur.spectrum.eigenvalues(0) <= prev.spectrum.eigenvalues(0)) lambda1_rising = false;
        for (int r = 0; r < ranks; ++r) {
            const double d = cur.spectrum.eigenvalues(r) - prev.spectrum.eigenvalues(r);
            sweep.deltas.push_back({prev.config.l, cur.config.l, r + 1, d});
            if (k >= 2) {
                const auto& earlier = sweep.deltas[(k - 2) * static_cast<std::size_t>(ranks) + static_cast<std::size_t>(r)];
                if (std::abs(d) > std::abs(earlier.delta)) {
                    shrinking = false;
                    worst = "rank " + std::to_string(r + 1) + " at l=" + std::to_string(cur.config.l);
                }
            }
        }
    }
    sweep.verdicts.push_back({"per-rank deltas shrink with l", shrinking, 0.0, shrinking ? "monotone" : worst});
    sweep.verdicts.push_back({"lambda_1 increases with l", lambda1_rising, 0.0, ""});
    return sweep;
}

// ---------------------------------------------------------------------------
// Rendering

inline nlohmann::json config_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["l"] = c.l;
    j["noise_p"] = c.noise_p ? nlohmann::json(*c.noise_p) : nlohmann::json(nullptr);
    j["seed"] = c.seed;
    if (c.full_rules()) {
        j["rules"] = "all";
    } else {
        j["rules"] = std::vector<int>(c.rules.begin(), c.rules.end());
    }
    j["tau_rel"] = c.tau_rel;
    j["eps_var"] = c.eps_var;
    return j;
}

/// Spectrum plus the metadata needed to reproduce it.
inline nlohmann::json spectrum_json(const RunReport& r) {
    nlohmann::json j = config_json(r.config);
    j["dropped_columns"] = r.dropped_columns;
    j["retained_columns"] = r.retained_columns;
    j["component_count"] = r.component_count;
    j["trace"] = r.trace;
    j["eigenvalues"] = std::vector<double>(r.spectrum.eigenvalues.data(),
                                           r.spectrum.eigenvalues.data() + r.spectrum.eigenvalues.size());
    return j;
}

/// "index,eigenvalue" rows (1-based) preceded by '#' metadata lines.
inline void write_spectrum_csv(std::ostream& os, const RunReport& r) {
    const auto& c = r.config;
    os << "# l: " << c.l << '\n';
    os << "# noise_p: " << (c.noise_p ? format_number(*c.noise_p) : std::string("none")) << '\n';
    os << "# seed: " << c.seed << '\n';
    os << "# tau_rel: " << format_number(c.tau_rel) << '\n';
    os << "# eps_var: " << format_number(c.eps_var) << '\n';
    os << "# dropped_columns:";
    for (int d : r.dropped_columns) os << ' ' << d;
    os << '\n';
    os << "# retained_columns: " << r.retained_columns << '\n';
    os << "# component_count: " << r.component_count << '\n';
    os << "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < r.spectrum.order(); ++i) {
        os << (i + 1) << ',' << format_number(r.spectrum.eigenvalues(i)) << '\n';
    }
}

inline nlohmann::json verdicts_json(const std::vector<Verdict>& verdicts) {
    auto out = nlohmann::json::array();
    for (const auto& v : verdicts) {
        out.push_back({{"name", v.name}, {"pass", v.pass}, {"tolerance", v.tolerance}, {"detail", v.detail}});
    }
    return out;
}

inline nlohmann::json report_json(const RunReport& r) {
    nlohmann::json j;
    j["config"] = config_json(r.config);
    j["spectrum"] = spectrum_json(r);
    j["component_count"] = r.component_count;
    j["dropped_columns"] = r.dropped_columns;
    j["reference"] = r.reference ? nlohmann::json(to_string(*r.reference)) : nlohmann::json(nullptr);
    auto& deltas = j["deltas"] = nlohmann::json::array();
    for (const auto& d : r.deltas) {
        deltas.push_back({{"rank", d.rank},
                          {"expected", d.expected},
                          {"actual", d.actual},
                          {"delta", d.delta()},
                          {"tolerance", d.tolerance},
                          {"pass", d.pass()}});
    }
    j["verdicts"] = verdicts_json(r.verdicts);
    j["passed"] = r.passed();
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline void render_text(std::ostream& os, const RunReport& r) {
    const auto& c = r.config;
    os << "run l=" << c.l << " noise_p=" << (c.noise_p ? format_number(*c.noise_p) : std::string("none"))
       << " seed=" << c.seed << '\n';
    os << "  retained columns: " << r.retained_columns << ", dropped:";
    for (int d : r.dropped_columns) os << ' ' << d;
    os << '\n';
    os << "  component count: " << r.component_count << " (tau_rel " << format_number(c.tau_rel) << ")\n";
    os << "  trace: " << format_number(r.trace) << '\n';
    const auto shown = std::min<Eigen::Index>(r.spectrum.order(), std::max(8, r.component_count + 1));
    for (Eigen::Index i = 0; i < shown; ++i) {
        os << "  lambda_" << (i + 1) << " = " << format_number(r.spectrum.eigenvalues(i)) << '\n';
    }
    if (r.reference) os << "  reference: " << to_string(*r.reference) << '\n';
    for (const auto& v : r.verdicts) {
        os << "  [" << (v.pass ? "PASS" : "FAIL") << "] " << v.name << " (tol " << format_number(v.tolerance)
           << ")" << (v.detail.empty() ? "" : ": " + v.detail) << '\n';
    }
    if (!r.note.empty()) os << "  note: " << r.note << '\n';
}

}  // namespace capca
