#include "meerr/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "meerr/estimated_optimum.hpp"
#include "meerr/theory.hpp"

namespace meerr {

namespace {

using nlohmann::json;

// Doubles pass through the 12-digit text form before entering a JSON
// document, so both output formats carry exactly the same values.
double round_to_report_precision(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_double(v).c_str(), nullptr);
}

json cell_to_json(const Table::Cell& cell) {
    if (std::holds_alternative<std::monostate>(cell)) return nullptr;
    if (std::holds_alternative<std::string>(cell)) return std::get<std::string>(cell);
    if (std::holds_alternative<long long>(cell)) return std::get<long long>(cell);
    if (std::holds_alternative<bool>(cell)) return std::get<bool>(cell);
    double v = std::get<double>(cell);
    if (!std::isfinite(v)) return nullptr;
    return round_to_report_precision(v);
}

std::string cell_to_csv(const Table::Cell& cell) {
    if (std::holds_alternative<std::monostate>(cell)) return "";
    if (std::holds_alternative<std::string>(cell)) return std::get<std::string>(cell);
    if (std::holds_alternative<long long>(cell)) return std::to_string(std::get<long long>(cell));
    if (std::holds_alternative<bool>(cell)) return std::get<bool>(cell) ? "true" : "false";
    return format_double(std::get<double>(cell));
}

void append_bound_rows(Table& t, const SimulationScenario& sc, const MomentMatrices& mm,
                       long n) {
    auto bound_row = [&](const char* name, double value) {
        std::vector<Table::Cell> row;
        row.emplace_back(std::string("bound"));
        row.emplace_back(std::string(name));
        row.emplace_back(static_cast<long long>(n));
        row.emplace_back(value * static_cast<double>(n));
        row.emplace_back(value);
        row.emplace_back(std::monostate{});
        row.emplace_back(std::monostate{});
        t.rows.push_back(std::move(row));
    };
    bound_row("plain_mean", variance_plain_mean(sc.population, n));
    bound_row("min_mse", min_mse(mm, sc.population, n));
    bound_row("min_mse_no_error", min_mse_no_error(mm, sc.population, n));
    bound_row("error_penalty", error_penalty(mm, sc.population, n));
}

// Estimator display name: the stable id, suffixed with its position when
// the same member appears more than once.
std::vector<std::string> display_names(const SimulationScenario& sc) {
    std::vector<std::string> names;
    for (const EstimatorConfig& cfg : sc.estimators) names.emplace_back(to_string(cfg.id));
    for (std::size_t i = 0; i < names.size(); ++i) {
        bool dup = false;
        for (std::size_t j = 0; j < names.size(); ++j)
            if (j != i && names[j] == names[i]) dup = true;
        if (dup) names[i] += "#" + std::to_string(i + 1);
    }
    return names;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string to_csv(const Table& table) {
    std::ostringstream os;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) os << ',';
        os << table.columns[i];
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << cell_to_csv(row[i]);
        }
        os << '\n';
    }
    return os.str();
}

json to_json_document(const Table& table, const std::string& command,
                      const SimulationScenario& scenario) {
    json doc;
    doc["command"] = command;
    doc["scenario"] = emit_config(scenario);
    doc["columns"] = table.columns;
    json rows = json::array();
    for (const auto& row : table.rows) {
        json obj;
        for (std::size_t i = 0; i < row.size() && i < table.columns.size(); ++i)
            obj[table.columns[i]] = cell_to_json(row[i]);
        rows.push_back(obj);
    }
    doc["rows"] = rows;
    return doc;
}

std::optional<SweepAxis> parse_axis(const std::string& text) {
    if (text == "n") return SweepAxis{SweepAxisKind::N, 0};
    if (text == "c0_err") return SweepAxis{SweepAxisKind::C0Err, 0};
    const std::string prefix = "c_err:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string tail = text.substr(prefix.size());
        if (tail.empty()) return std::nullopt;
        char* end = nullptr;
        long idx = std::strtol(tail.c_str(), &end, 10);
        if (end == nullptr || *end != '\0' || idx < 1) return std::nullopt;
        return SweepAxis{SweepAxisKind::CErr, static_cast<int>(idx)};
    }
    return std::nullopt;
}

Table theory_table(const SimulationScenario& sc) {
    const MomentMatrices mm = build_moments(sc.population);
    const std::vector<std::string> names = display_names(sc);

    Table t;
    t.columns = {"kind", "name", "n", "n_mse", "mse", "n_bias", "bias"};
    for (std::size_t k = 0; k < sc.estimators.size(); ++k) {
        DerivativeProfile profile =
            derivative_profile(sc.estimators[k], sc.population.mu0, sc.population.mu);
        TheoryResult tr = theory_result(profile, mm, sc.population, sc.n);
        std::vector<Table::Cell> row;
        row.emplace_back(std::string("estimator"));
        row.emplace_back(names[k]);
        row.emplace_back(static_cast<long long>(sc.n));
        row.emplace_back(tr.n_mse);
        row.emplace_back(tr.mse);
        row.emplace_back(tr.n_bias);
        row.emplace_back(tr.bias);
        t.rows.push_back(std::move(row));
    }
    append_bound_rows(t, sc, mm, sc.n);
    return t;
}

Table simulate_table(const SimulationScenario& sc, const EmpiricalStats& stats) {
    Table t;
    t.columns = {"name",          "n",    "replications", "used",   "domain_errors",
                 "unstable",      "mean_estimate",        "bias",   "se_bias",
                 "mse",           "se_mse",               "n_mse",  "n_bias"};
    const std::vector<std::string> names = display_names(sc);
    for (std::size_t k = 0; k < stats.estimators.size(); ++k) {
        const FunctionalStats& e = stats.estimators[k];
        std::vector<Table::Cell> row;
        row.emplace_back(k < names.size() ? names[k] : e.name);
        row.emplace_back(static_cast<long long>(stats.n));
        row.emplace_back(static_cast<long long>(stats.replications));
        row.emplace_back(static_cast<long long>(e.used));
        row.emplace_back(static_cast<long long>(e.domain_errors));
        row.emplace_back(e.unstable);
        row.emplace_back(e.mean_estimate);
        row.emplace_back(e.bias);
        row.emplace_back(e.se_bias);
        row.emplace_back(e.mse);
        row.emplace_back(e.se_mse);
        row.emplace_back(e.mse * static_cast<double>(stats.n));
        row.emplace_back(e.bias * static_cast<double>(stats.n));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table compare_table(const ComparisonReport& report) {
    Table t;
    t.columns = {"name",   "empirical_mse",  "theory_mse",  "z_mse",  "mse_pass",
                 "empirical_bias", "theory_bias", "z_bias", "bias_pass"};
    for (const ComparisonRow& r : report.rows) {
        std::vector<Table::Cell> row;
        row.emplace_back(r.name);
        row.emplace_back(r.empirical_mse);
        row.emplace_back(r.theory_mse);
        row.emplace_back(r.z_mse);
        row.emplace_back(r.mse_pass);
        row.emplace_back(r.empirical_bias);
        row.emplace_back(r.theory_bias);
        row.emplace_back(r.z_bias);
        row.emplace_back(r.bias_pass);
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table sweep_table(const SimulationScenario& sc, const SweepAxis& axis,
                  const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("sweep: grid must not be empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("sweep: grid values must be strictly increasing");
    if (axis.kind == SweepAxisKind::CErr &&
        (axis.index < 1 || axis.index > sc.population.p()))
        throw std::invalid_argument("sweep: c_err axis index out of range");

    std::string axis_name;
    switch (axis.kind) {
        case SweepAxisKind::N: axis_name = "n"; break;
        case SweepAxisKind::C0Err: axis_name = "c0_err"; break;
        case SweepAxisKind::CErr:
            axis_name = "c_err:" + std::to_string(axis.index);
            break;
    }

    const std::vector<std::string> names = display_names(sc);
    Table t;
    t.columns = {"axis", "value", "n", "plain_mse", "min_mse", "min_mse_no_error",
                 "error_penalty"};
    for (const std::string& name : names) t.columns.push_back("mse_" + name);

    for (double value : grid) {
        SimulationScenario point = sc;
        long n = sc.n;
        switch (axis.kind) {
            case SweepAxisKind::N: {
                if (!(value >= 1.0) || value != std::floor(value))
                    throw std::invalid_argument("sweep: n grid values must be positive integers");
                n = static_cast<long>(value);
                break;
            }
            case SweepAxisKind::C0Err:
                if (!(value >= 0.0))
                    throw std::invalid_argument("sweep: c0_err grid values must be nonnegative");
                point.population.c0_err = value;
                break;
            case SweepAxisKind::CErr:
                if (!(value >= 0.0))
                    throw std::invalid_argument("sweep: c_err grid values must be nonnegative");
                point.population.c_err(axis.index - 1) = value;
                break;
        }
        const MomentMatrices mm = build_moments(point.population);

        std::vector<Table::Cell> row;
        row.emplace_back(axis_name);
        row.emplace_back(value);
        row.emplace_back(static_cast<long long>(n));
        row.emplace_back(variance_plain_mean(point.population, n));
        row.emplace_back(min_mse(mm, point.population, n));
        row.emplace_back(min_mse_no_error(mm, point.population, n));
        row.emplace_back(error_penalty(mm, point.population, n));
        for (const EstimatorConfig& cfg : point.estimators) {
            DerivativeProfile profile =
                derivative_profile(cfg, point.population.mu0, point.population.mu);
            row.emplace_back(mse_first_order(profile, mm, point.population, n));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

EmpiricalStats load_simulate_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open simulate report: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw std::runtime_error("simulate report is not valid JSON: " + path);
    if (!doc.contains("command") || doc.at("command") != "simulate")
        throw std::runtime_error("not a simulate report: " + path);
    if (!doc.contains("rows") || !doc.at("rows").is_array())
        throw std::runtime_error("simulate report has no rows: " + path);

    auto num = [](const json& row, const char* key) {
        if (!row.contains(key)) throw std::runtime_error(std::string("simulate report row missing ") + key);
        const json& v = row.at(key);
        if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
        return v.get<double>();
    };

    EmpiricalStats stats;
    for (const json& row : doc.at("rows")) {
        FunctionalStats e;
        e.name = row.at("name").get<std::string>();
        // Replication-scale duplicates appear once per row; keep the last.
        stats.n = static_cast<long>(num(row, "n"));
        stats.replications = static_cast<long>(num(row, "replications"));
        e.used = static_cast<long>(num(row, "used"));
        e.domain_errors = static_cast<long>(num(row, "domain_errors"));
        e.unstable = row.at("unstable").get<bool>();
        e.mean_estimate = num(row, "mean_estimate");
        e.bias = num(row, "bias");
        e.se_bias = num(row, "se_bias");
        e.mse = num(row, "mse");
        e.se_mse = num(row, "se_mse");
        stats.estimators.push_back(std::move(e));
    }
    if (doc.contains("scenario") && doc.at("scenario").contains("simulation") &&
        doc.at("scenario").at("simulation").contains("seed"))
        stats.seed = doc.at("scenario").at("simulation").at("seed").get<std::uint64_t>();
    return stats;
}

int run(const RunConfig& rc) {
    try {
        if (rc.out_path.empty()) {
            std::cerr << "error: no output path given\n";
            return 1;
        }
        if (rc.threads < 1 || rc.threads > 256) {
            std::cerr << "error: thread count must lie in [1, 256]\n";
            return 1;
        }
        if (!(rc.z_threshold > 0.0)) {
            std::cerr << "error: z threshold must be positive\n";
            return 1;
        }

        std::ifstream in(rc.config_path);
        if (!in) {
            std::cerr << "error: cannot open config: " << rc.config_path << "\n";
            return 1;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        ParsedConfig parsed = parse_config_text(buf.str());
        if (!parsed.ok) {
            for (const auto& e : parsed.errors) std::cerr << "config error at " << e << "\n";
            return 1;
        }
        const SimulationScenario& sc = parsed.scenario;

        Table table;
        json extra = json::object();
        std::string command_name;
        int exit_code = 0;

        switch (rc.command) {
            case Command::Theory: {
                command_name = "theory";
                table = theory_table(sc);
                break;
            }
            case Command::Simulate: {
                command_name = "simulate";
                EmpiricalStats stats = run_monte_carlo(sc, rc.threads);
                table = simulate_table(sc, stats);
                break;
            }
            case Command::Compare: {
                command_name = "compare";
                EmpiricalStats stats = rc.sim_path.empty()
                                           ? run_monte_carlo(sc, rc.threads)
                                           : load_simulate_report(rc.sim_path);
                const MomentMatrices mm = build_moments(sc.population);
                std::vector<std::string> names = display_names(sc);
                std::vector<TheoryResult> theory;
                for (const EstimatorConfig& cfg : sc.estimators) {
                    DerivativeProfile profile =
                        derivative_profile(cfg, sc.population.mu0, sc.population.mu);
                    theory.push_back(theory_result(profile, mm, sc.population, sc.n));
                }
                // Rows loaded from a report carry the plain ids; align them
                // with the display names before matching.
                if (!rc.sim_path.empty() && stats.estimators.size() == names.size())
                    for (std::size_t i = 0; i < names.size(); ++i)
                        if (stats.estimators[i].name == std::string(to_string(sc.estimators[i].id)))
                            stats.estimators[i].name = names[i];
                if (!rc.sim_path.empty() && stats.n != sc.n)
                    throw std::runtime_error("simulate report sample size disagrees with config");
                ComparisonReport report =
                    compare_theory(stats, names, theory, rc.z_threshold);
                table = compare_table(report);
                extra["z_threshold"] = round_to_report_precision(report.z_threshold);
                extra["pass"] = report.pass;
                exit_code = report.pass ? 0 : 2;
                break;
            }
            case Command::Sweep: {
                command_name = "sweep";
                if (!rc.axis) {
                    std::cerr << "error: sweep needs --axis\n";
                    return 1;
                }
                table = sweep_table(sc, *rc.axis, rc.grid);
                break;
            }
        }

        std::ofstream out(rc.out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write report: " << rc.out_path << "\n";
            return 1;
        }
        if (rc.format == OutputFormat::Csv) {
            out << to_csv(table);
        } else {
            json doc = to_json_document(table, command_name, sc);
            for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
            out << doc.dump(2) << "\n";
        }
        out.flush();
        if (!out) {
            std::cerr << "error: write failed: " << rc.out_path << "\n";
            return 1;
        }
        return exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace meerr
