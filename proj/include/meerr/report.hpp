#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "meerr/config.hpp"
#include "meerr/simulate.hpp"

namespace meerr {

enum class Command { Theory, Simulate, Compare, Sweep };
enum class OutputFormat { Csv, Json };

enum class SweepAxisKind { N, C0Err, CErr };

struct SweepAxis {
    SweepAxisKind kind = SweepAxisKind::N;
    int index = 0;  // 1-based auxiliary index, CErr only
};

// Everything the command line hands over for one invocation.
struct RunConfig {
    Command command = Command::Theory;
    std::string config_path;
    std::string out_path;
    OutputFormat format = OutputFormat::Csv;
    double z_threshold = 4.0;
    std::optional<SweepAxis> axis;
    std::vector<double> grid;
    int threads = 1;
    std::string sim_path;  // compare only: reuse a JSON simulate report
};

// Uniform tabular result; one renderer per output format keeps the two
// byte-for-byte consistent.
struct Table {
    using Cell = std::variant<std::monostate, std::string, double, long long, bool>;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

// 12 significant digits, the precision every report is written with.
std::string format_double(double v);

std::string to_csv(const Table& table);
nlohmann::json to_json_document(const Table& table, const std::string& command,
                                const SimulationScenario& scenario);

std::optional<SweepAxis> parse_axis(const std::string& text);

Table theory_table(const SimulationScenario& scenario);
Table simulate_table(const SimulationScenario& scenario, const EmpiricalStats& stats);
Table compare_table(const ComparisonReport& report);
Table sweep_table(const SimulationScenario& scenario, const SweepAxis& axis,
                  const std::vector<double>& grid);

// Reads back the estimator rows of a JSON simulate report.
EmpiricalStats load_simulate_report(const std::string& path);

// Executes one command end to end: read config, compute, write the report.
// Returns the process exit code: 0 on success (and agreement for compare),
// 2 when a compare finds disagreement, 1 on any error.
int run(const RunConfig& rc);

}  // namespace meerr
