#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meerr/population.hpp"

namespace meerr {

// The estimator family. PLAIN is the unadjusted sample mean; M1..M18 use the
// auxiliary information through ratio, product, exponential or difference
// adjustments of the mean.
enum class EstimatorId {
    Plain,
    M1, M2, M3, M4, M5, M6, M7, M8, M9, M10,
    M11, M12, M13, M14, M15, M16, M17, M18,
};

// Stable external name ("PLAIN", "M1", ... "M18").
const char* to_string(EstimatorId id);
std::optional<EstimatorId> parse_estimator_id(const std::string& name);

// All member ids, PLAIN first. Handy for sweeping the family.
const std::vector<EstimatorId>& all_estimators();

// Parameter block for one family member. Which fields must be present
// depends on the id:
//   M1..M8       omega, length p, summing to 1
//   M9, M10      omega, length p + 1, summing to 1
//   M11          omega (length p, summing to 1) and q with 1 <= q < p
//   M12..M14, M18  alpha, length p
//   M15, M16     theta, length p
//   M17          omega (length p, summing to 1, all entries nonzero) and theta
//   PLAIN        no parameters
struct EstimatorConfig {
    EstimatorId id = EstimatorId::Plain;
    std::optional<Eigen::VectorXd> omega;
    std::optional<Eigen::VectorXd> alpha;
    std::optional<Eigen::VectorXd> theta;
    std::optional<int> q;
};

// Sample means handed to an estimator.
struct SampleSummary {
    double y_bar = 0.0;
    Eigen::VectorXd x_bar;
    long n = 0;
};

// First- and second-order behaviour of a member around the true means:
// d is the gradient in the scaled auxiliaries divided by mu0, H the matching
// Hessian divided by mu0, and c the cross partials in (mean, scaled
// auxiliaries), not rescaled.
struct DerivativeProfile {
    Eigen::VectorXd d;
    Eigen::MatrixXd H;
    Eigen::VectorXd c;
};

// Evaluation hit a point outside the member's domain (vanishing denominator,
// nonpositive base under a fractional power, ...). Carries which member and,
// where applicable, which auxiliary variate tripped the guard.
class EvaluationDomainError : public std::runtime_error {
public:
    EvaluationDomainError(EstimatorId id, int variate, const std::string& what);
    EstimatorId id;
    int variate;  // 1-based, or 0 when not tied to a single variate
};

// Magnitude below which a denominator counts as vanished.
inline constexpr double kTinyDenominator = 1e-300;

ValidationReport validate_config(const EstimatorConfig& cfg, int p);
void require_valid(const EstimatorConfig& cfg, int p);

// Value of the member at the given sample means. Throws
// EvaluationDomainError on domain violations.
double evaluate(const EstimatorConfig& cfg, const SampleSummary& sample,
                const Eigen::VectorXd& mu);

// Closed-form derivative profile at the true means.
DerivativeProfile derivative_profile(const EstimatorConfig& cfg, double mu0,
                                     const Eigen::VectorXd& mu);

// Finite-difference profile from evaluate() only, for cross-checking the
// closed forms. Fourth-order central stencils with step h.
DerivativeProfile numeric_profile(const EstimatorConfig& cfg, double mu0,
                                  const Eigen::VectorXd& mu, double h = 1e-3);

// Parameters that minimise the first-order MSE for the given member,
// respecting the member's own constraints (weights summing to 1 where the
// form demands it). M11 needs the split point q supplied by the caller.
EstimatorConfig optimal_params(EstimatorId id, const PopulationSpec& spec,
                               const MomentMatrices& mm,
                               std::optional<int> q = std::nullopt);

}  // namespace meerr
