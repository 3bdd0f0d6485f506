#pragma once

// Command-line front end. Exit codes: 0 success, 1 runtime / I/O error,
// 2 usage error, 3 reproduction mismatch.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "capca/dataset.hpp"
#include "capca/errors.hpp"
#include "capca/experiments.hpp"
#include "capca/io.hpp"

#ifndef CAPCA_DATA_DIR
#define CAPCA_DATA_DIR "data"
#endif

namespace capca::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2, kMismatch = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "all", or a comma list of indices and inclusive ranges: "30,90,100-110".
inline std::set<int> parse_rule_list(const std::string& text) {
    if (text == "all") return ExperimentConfig::full_rule_set();
    std::set<int> rules;
    auto to_int = [&](std::string_view s) {
        int v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < 0 || v >= kRuleCount) {
            throw UsageError("--rules: bad rule index '" + std::string(s) + "'");
        }
        return v;
    };
    for (const auto& item : split_csv_line(text)) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            rules.insert(to_int(item));
        } else {
            const int lo = to_int(std::string_view(item).substr(0, dash));
            const int hi = to_int(std::string_view(item).substr(dash + 1));
            if (lo > hi) throw UsageError("--rules: empty range '" + item + "'");
            for (int r = lo; r <= hi; ++r) rules.insert(r);
        }
    }
    if (rules.empty()) throw UsageError("--rules: empty rule list");
    return rules;
}

namespace detail {

struct Options {
    int l = 0;
    std::optional<double> noise_p;
    std::optional<std::uint64_t> seed;
    std::string rules = "all";
    double tau = kDefaultComponentTau;
    double eps_var = kDefaultVarianceEpsilon;
    std::string out;
    std::string format;
    unsigned threads = 1;
    std::string table;
    double tol = 1e-3;
    std::vector<int> l_list;
    std::vector<double> p_list;
    std::string out_dir;
    std::string data_dir = CAPCA_DATA_DIR;
};

inline void require_seed(const Options& o, bool noisy) {
    if (noisy && !o.seed) throw UsageError("--seed is required when the noise probability is positive");
}

inline ExperimentConfig make_config(const Options& o) {
    ExperimentConfig c;
    c.l = o.l;
    c.noise_p = o.noise_p;
    c.seed = o.seed.value_or(0);
    c.rules = parse_rule_list(o.rules);
    c.tau_rel = o.tau;
    c.eps_var = o.eps_var;
    c.threads = o.threads;
    require_seed(o, c.noisy());
    return c;
}

/// Writes through `emit` to --out, or to `out` when no file is given.
template <typename Emit>
void write_output(const std::string& path, std::ostream& out, Emit&& emit) {
    if (path.empty() || path == "-") {
        emit(out);
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file " + path);
    emit(file);
    file.close();
    if (!file) throw std::runtime_error("failed writing " + path);
}

inline std::string ensure_format(const std::string& f, const std::string& fallback) {
    return f.empty() ? fallback : f;
}

inline int cmd_table(const Options& o, std::ostream& out) {
    const auto cfg = make_config(o);
    std::optional<NoiseModel> noise;
    if (cfg.noisy()) noise.emplace(*cfg.noise_p, cfg.seed);
    const auto F = build_matrix(cfg.l, cfg.rules, noise, cfg.threads);
    const auto format = ensure_format(o.format, "csv");
    write_output(o.out, out, [&](std::ostream& os) {
        if (format == "json") {
            os << to_json(F).dump(2) << '\n';
        } else {
            write_csv(os, F);
        }
    });
    return kOk;
}

inline int cmd_spectrum(const Options& o, std::ostream& out) {
    const auto report = run(make_config(o));
    const auto format = ensure_format(o.format, "csv");
    write_output(o.out, out, [&](std::ostream& os) {
        if (format == "json") {
            os << spectrum_json(report).dump(2) << '\n';
        } else {
            write_spectrum_csv(os, report);
        }
    });
    return kOk;
}

inline nlohmann::json sweep_json(const SweepReport& s) {
    nlohmann::json j;
    auto& deltas = j["deltas"] = nlohmann::json::array();
    for (const auto& d : s.deltas) {
        deltas.push_back({{"from_l", d.from_l}, {"to_l", d.to_l}, {"rank", d.rank}, {"delta", d.delta}});
    }
    j["verdicts"] = verdicts_json(s.verdicts);
    j["passed"] = s.passed();
    return j;
}

inline int cmd_reproduce(const Options& o, std::ostream& out) {
    ReferenceId id{};
    try {
        id = parse_reference_id(o.table);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    const auto ref = load_reference(id, o.data_dir);
    const auto format = ensure_format(o.format, "json");

    std::vector<RunReport> reports;
    std::optional<SweepReport> sweep;
    if (id == ReferenceId::NoiselessTop7) {
        ExperimentConfig base;
        base.threads = o.threads;
        sweep = convergence_sweep(ref.row_keys, base);
        for (const auto& r : sweep->runs) reports.push_back(compare(r, ref, o.tol));
    } else {
        if (!o.seed) throw UsageError("--seed is required for noisy reference tables");
        for (double p : ref.column_keys) {
            ExperimentConfig cfg;
            cfg.l = *ref.pattern_length;
            cfg.noise_p = p;
            cfg.seed = *o.seed;
            cfg.threads = o.threads;
            reports.push_back(compare(run(cfg), ref, o.tol));
        }
    }

    bool passed = !sweep || sweep->passed();
    for (const auto& r : reports) passed = passed && r.passed();

    write_output(o.out, out, [&](std::ostream& os) {
        if (format == "text") {
            os << "reference " << to_string(id) << " (tol " << format_number(o.tol) << ")\n";
            for (const auto& r : reports) render_text(os, r);
            if (sweep) {
                for (const auto& v : sweep->verdicts) {
                    os << "[" << (v.pass ? "PASS" : "FAIL") << "] " << v.name << (v.detail.empty() ? "" : ": " + v.detail)
                       << '\n';
                }
            }
            os << (passed ? "PASS" : "FAIL") << '\n';
        } else {
            nlohmann::json j;
            j["reference"] = to_string(id);
            j["tol"] = o.tol;
            j["runs"] = nlohmann::json::array();
            for (const auto& r : reports) j["runs"].push_back(report_json(r));
            if (sweep) j["convergence"] = sweep_json(*sweep);
            j["passed"] = passed;
            os << j.dump(2) << '\n';
        }
    });
    return passed ? kOk : kMismatch;
}

/// Picks the reference a sweep point can be judged against, if any.
inline std::optional<ReferenceId> reference_for(const ExperimentConfig& cfg, const ReferenceTable& top7,
                                                const ReferenceTable& l5, const ReferenceTable& l6) {
    if (!cfg.full_rules()) return std::nullopt;
    if (!cfg.noisy()) {
        if (top7.row_of(cfg.l)) return ReferenceId::NoiselessTop7;
        return std::nullopt;
    }
    if (cfg.l == 5 && l5.column_of(*cfg.noise_p)) return ReferenceId::NoisyL5;
    if (cfg.l == 6 && l6.column_of(*cfg.noise_p)) return ReferenceId::NoisyL6;
    return std::nullopt;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
    if (o.l_list.empty() || o.p_list.empty()) throw UsageError("--l-list and --p-list must be non-empty");
    for (int l : o.l_list) {
        if (l < 3 || l > kMaxPatternLength) throw UsageError("--l-list: l must lie in 3..20");
    }
    bool any_noisy = false;
    for (double p : o.p_list) {
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError("--p-list: probability outside [0, 1]");
        any_noisy = any_noisy || p > 0.0;
    }
    require_seed(o, any_noisy);

    const auto top7 = load_reference(ReferenceId::NoiselessTop7, o.data_dir);
    const auto l5 = load_reference(ReferenceId::NoisyL5, o.data_dir);
    const auto l6 = load_reference(ReferenceId::NoisyL6, o.data_dir);

    const std::filesystem::path dir(o.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json index;
    index["seed"] = o.seed ? nlohmann::json(*o.seed) : nlohmann::json(nullptr);
    index["reports"] = nlohmann::json::array();
    for (int l : o.l_list) {
        for (double p : o.p_list) {
            ExperimentConfig cfg;
            cfg.l = l;
            cfg.noise_p = p;
            cfg.seed = o.seed.value_or(0);
            cfg.rules = parse_rule_list(o.rules);
            cfg.tau_rel = o.tau;
            cfg.eps_var = o.eps_var;
            cfg.threads = o.threads;

            auto report = run(cfg);
            const auto ref = reference_for(cfg, top7, l5, l6);
            if (ref) {
                const auto& table = *ref == ReferenceId::NoiselessTop7 ? top7 : (*ref == ReferenceId::NoisyL5 ? l5 : l6);
                report = compare(std::move(report), table, o.tol);
            } else {
                report.note = "exploratory run: no reference table applies, nothing is asserted";
            }

            const auto name = "report_l" + std::to_string(l) + "_p" + format_number(p) + ".json";
            write_output((dir / name).string(), out, [&](std::ostream& os) { os << report_json(report).dump(2) << '\n'; });
            index["reports"].push_back({{"file", name},
                                        {"l", l},
                                        {"noise_p", p},
                                        {"component_count", report.component_count},
                                        {"judged", ref.has_value()},
                                        {"passed", ref ? nlohmann::json(report.passed()) : nlohmann::json(nullptr)}});
        }
    }
    write_output((dir / "index.json").string(), out, [&](std::ostream& os) { os << index.dump(2) << '\n'; });
    out << "wrote " << index["reports"].size() << " reports to " << dir.string() << '\n';
    return kOk;
}

}  // namespace detail

/// Parses `args` (args[0] is the program name) and runs one subcommand.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mine elementary cellular automata databases with weighted PCA", "capca"};
    app.require_subcommand(1);
    detail::Options o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--noise-p", o.noise_p, "bit flip probability")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--seed", o.seed, "noise seed (required when --noise-p > 0)");
        cmd->add_option("--rules", o.rules, "rule subset: 'all' or e.g. 30,90,100-110");
        cmd->add_option("--threads", o.threads, "worker threads for table construction")->check(CLI::Range(1u, 1024u));
        cmd->add_option("--out", o.out, "output file (default: standard output)");
    };

    auto* table = app.add_subcommand("table", "emit the input/output database");
    table->add_option("--l", o.l, "pattern length")->required()->check(CLI::Range(3, kMaxPatternLength));
    add_common(table);
    table->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the correlation matrix");
    spectrum->add_option("--l", o.l, "pattern length")->required()->check(CLI::Range(3, kMaxPatternLength));
    add_common(spectrum);
    spectrum->add_option("--tau", o.tau, "relative component threshold")->check(CLI::Range(0.0, 1.0));
    spectrum->add_option("--eps-var", o.eps_var, "variance below which a column is dropped")
        ->check(CLI::NonNegativeNumber);
    spectrum->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* reproduce = app.add_subcommand("reproduce", "compare against a published reference table");
    reproduce->add_option("--table", o.table, "original, noisy-l5 or noisy-l6")->required();
    reproduce->add_option("--seed", o.seed, "noise seed (noisy tables)");
    reproduce->add_option("--tol", o.tol, "absolute per-entry tolerance")->check(CLI::PositiveNumber);
    reproduce->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1u, 1024u));
    reproduce->add_option("--format", o.format, "json or text")->check(CLI::IsMember({"json", "text"}));
    reproduce->add_option("--out", o.out, "output file (default: standard output)");
    reproduce->add_option("--data-dir", o.data_dir, "directory holding the reference tables");

    auto* sweep = app.add_subcommand("sweep", "one report per (l, p) combination");
    sweep->add_option("--l-list", o.l_list, "pattern lengths, comma separated")->required()->delimiter(',');
    sweep->add_option("--p-list", o.p_list, "flip probabilities, comma separated")->required()->delimiter(',');
    sweep->add_option("--seed", o.seed, "noise seed (required when any p > 0)");
    sweep->add_option("--rules", o.rules, "rule subset");
    sweep->add_option("--tau", o.tau, "relative component threshold")->check(CLI::Range(0.0, 1.0));
    sweep->add_option("--eps-var", o.eps_var, "variance threshold")->check(CLI::NonNegativeNumber);
    sweep->add_option("--tol", o.tol, "absolute tolerance for noiseless comparisons")->check(CLI::PositiveNumber);
    sweep->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1u, 1024u));
    sweep->add_option("--out-dir", o.out_dir, "directory for the reports")->required();
    sweep->add_option("--data-dir", o.data_dir, "directory holding the reference tables");

    std::vector<char*> argv;
    std::vector<std::string> storage = args.empty() ? std::vector<std::string>{"capca"} : args;
    argv.reserve(storage.size());
    for (auto& a : storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*table) return detail::cmd_table(o, out);
        if (*spectrum) return detail::cmd_spectrum(o, out);
        if (*reproduce) return detail::cmd_reproduce(o, out);
        if (*sweep) return detail::cmd_sweep(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}

}  // namespace capca::cli
