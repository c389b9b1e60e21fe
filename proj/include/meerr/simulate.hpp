#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "meerr/estimators.hpp"
#include "meerr/population.hpp"
#include "meerr/theory.hpp"

namespace meerr {

enum class Distribution { Gaussian, Lognormal };
enum class ErrorDistribution { Gaussian };

// One Monte Carlo study: a population, the members to run on it, and the
// sampling plan. Everything that influences the draws lives here; thread
// count deliberately does not.
struct SimulationScenario {
    PopulationSpec population;
    std::vector<EstimatorConfig> estimators;
    long n = 0;
    long replications = 0;
    std::uint64_t seed = 0;
    Distribution distribution = Distribution::Gaussian;
    ErrorDistribution error_distribution = ErrorDistribution::Gaussian;
};

// One drawn sample, both as observed (with measurement error) and as the
// underlying error-free values, which the tests lean on.
struct ObservedSample {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;        // n rows, p columns
    Eigen::VectorXd y_true;
    Eigen::MatrixXd x_true;

    SampleSummary summary() const;
    SampleSummary summary_true() const;
};

// Accuracy of one functional over the replications that stayed inside its
// domain.
struct FunctionalStats {
    std::string name;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double mse = 0.0;
    double se_mse = 0.0;    // Monte Carlo standard error of the MSE estimate
    double se_bias = 0.0;   // standard error of the mean estimate
    long domain_errors = 0;
    long used = 0;
    bool unstable = false;  // more than 1% of replications failed
};

struct EmpiricalStats {
    long n = 0;
    long replications = 0;
    std::uint64_t seed = 0;
    std::vector<FunctionalStats> estimators;
};

// Theory-versus-simulation verdict for one member.
struct ComparisonRow {
    std::string name;
    double empirical_mse = 0.0;
    double theory_mse = 0.0;
    double z_mse = 0.0;
    bool mse_pass = false;
    double empirical_bias = 0.0;
    double theory_bias = 0.0;
    double z_bias = 0.0;
    bool bias_pass = false;
};

struct ComparisonReport {
    double z_threshold = 0.0;
    bool pass = false;
    std::vector<ComparisonRow> rows;
};

// Precomputed sampling machinery for a scenario: the factored covariance of
// the true variates (on log scale for the lognormal route) and the error
// standard deviations.
struct SamplerPlan {
    int p = 0;
    Distribution distribution = Distribution::Gaussian;
    Eigen::VectorXd mean;        // (mu0, mu), gaussian route
    Eigen::MatrixXd factor;
    Eigen::VectorXd log_mean;    // lognormal route
    Eigen::MatrixXd log_factor;
    double err_sd0 = 0.0;
    Eigen::VectorXd err_sd;
    long n = 0;
};

// Anything evaluated once per replication. Returns NaN to signal that the
// replication fell outside its domain.
struct Functional {
    std::string name;
    std::function<double(const ObservedSample&, const SampleSummary&)> fn;
};

ValidationReport validate_scenario(const SimulationScenario& scenario);
void require_valid(const SimulationScenario& scenario);

SamplerPlan make_sampler_plan(const SimulationScenario& scenario);

// Draws replication `index` of the scenario. The draw depends only on
// (plan, seed, index), never on call order.
ObservedSample draw_sample(const SamplerPlan& plan, std::uint64_t seed, long index);
ObservedSample draw_sample(const SimulationScenario& scenario, long index);

// Runs the functionals over all replications. With `threads` > 1 the
// replication range is split into contiguous chunks; results are
// bit-identical for every thread count because each replication seeds its
// own streams and the reduction order is fixed.
EmpiricalStats run_functionals(const SimulationScenario& scenario,
                               const std::vector<Functional>& functionals, int threads = 1);

// run_functionals over the scenario's own estimator list.
EmpiricalStats run_monte_carlo(const SimulationScenario& scenario, int threads = 1);

// Lines up empirical moments with first-order theory, flagging rows whose
// standardized gap exceeds z_threshold.
ComparisonReport compare_theory(const EmpiricalStats& stats,
                                const std::vector<std::string>& names,
                                const std::vector<TheoryResult>& theory,
                                double z_threshold = 4.0);

// Sum with a fixed pairwise reduction tree; the building block that keeps
// aggregation deterministic.
double pairwise_sum(const double* v, std::size_t len);

}  // namespace meerr
