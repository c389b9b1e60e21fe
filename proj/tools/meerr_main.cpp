#include <string>

#include <CLI11.hpp>

#include "meerr/report.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    double z_threshold = 4.0;
    std::string axis;
    std::vector<double> grid;
    int threads = 1;
    std::string sim_path;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "Scenario configuration (JSON)")
        ->required();
    cmd->add_option("--out", opt.out_path, "Report file to write")->required();
    cmd->add_option("--format", opt.format, "Report format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--threads", opt.threads, "Worker threads for the replication loop")
        ->check(CLI::Range(1, 256))
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Population-mean estimation with auxiliary variables under measurement error"};
    app.require_subcommand(1);
    CliOptions opt;

    CLI::App* theory = app.add_subcommand("theory", "First-order MSE and bias per estimator");
    add_common(theory, opt);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo study of the scenario");
    add_common(simulate, opt);

    CLI::App* compare =
        app.add_subcommand("compare", "Line up simulation results with the theory");
    add_common(compare, opt);
    compare->add_option("--z", opt.z_threshold, "Standardized gap threshold")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    compare->add_option("--sim", opt.sim_path,
                        "Reuse an existing JSON simulate report instead of re-running");

    CLI::App* sweep = app.add_subcommand("sweep", "Theory quantities along a parameter grid");
    add_common(sweep, opt);
    sweep->add_option("--axis", opt.axis, "Swept quantity: n, c0_err or c_err:<i>")->required();
    sweep->add_option("--grid", opt.grid, "Grid values, comma separated")
        ->required()
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    meerr::RunConfig rc;
    rc.config_path = opt.config_path;
    rc.out_path = opt.out_path;
    rc.format = opt.format == "json" ? meerr::OutputFormat::Json : meerr::OutputFormat::Csv;
    rc.z_threshold = opt.z_threshold;
    rc.threads = opt.threads;
    rc.sim_path = opt.sim_path;

    if (theory->parsed()) rc.command = meerr::Command::Theory;
    if (simulate->parsed()) rc.command = meerr::Command::Simulate;
    if (compare->parsed()) rc.command = meerr::Command::Compare;
    if (sweep->parsed()) {
        rc.command = meerr::Command::Sweep;
        auto axis = meerr::parse_axis(opt.axis);
        if (!axis) {
            std::cerr << "error: --axis must be n, c0_err or c_err:<i>\n";
            return 1;
        }
        rc.axis = *axis;
        rc.grid = opt.grid;
    }
    return meerr::run(rc);
}
