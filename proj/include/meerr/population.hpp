#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace meerr {

// Ground truth for one scenario: true means, coefficients of variation and
// correlations of the study/auxiliary variates, plus the coefficients of
// variation of the additive measurement errors riding on each of them.
struct PopulationSpec {
    double mu0 = 0.0;          // true mean of the study variate
    Eigen::VectorXd mu;        // true means of the p auxiliary variates
    double c0 = 0.0;           // CV of the study variate
    Eigen::VectorXd c;         // CVs of the auxiliary variates
    double c0_err = 0.0;       // CV of the error on the study variate
    Eigen::VectorXd c_err;     // CVs of the errors on the auxiliaries
    Eigen::VectorXd rho0;      // correlation of study variate with each auxiliary
    Eigen::MatrixXd rho;       // correlations among the auxiliaries, p x p

    int p() const { return static_cast<int>(mu.size()); }
};

// Second-moment structure of the scaled sample means under measurement error.
// A drives the quadratic term of every MSE in the family; A_star is its
// error-free twin and b the study/auxiliary coupling.
struct MomentMatrices {
    Eigen::MatrixXd A;        // off-diagonal rho_ij c_i c_j, diagonal c_i^2 + c_err_i^2
    Eigen::MatrixXd A_star;   // same off-diagonal, diagonal c_i^2
    Eigen::VectorXd b;        // b_i = rho0_i c0 c_i
    Eigen::VectorXd C_diag;   // c_i^2 + c_err_i^2
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
};

struct RSquaredResult {
    double value = 0.0;
    bool clamped = false;     // raw ratio fell outside [0, 1] and was clipped
};

// Factorization pivots may go slightly negative through round-off; anything
// above -kPsdPivotTol * max diagonal is treated as zero.
inline constexpr double kPsdPivotTol = 1e-10;

// Structural and numeric checks on a spec. Collects every violation instead
// of stopping at the first one.
ValidationReport validate_spec(const PopulationSpec& spec);

// Throws std::invalid_argument listing all violations when the spec is bad.
void require_valid(const PopulationSpec& spec);

MomentMatrices build_moments(const PopulationSpec& spec);

// Squared multiple correlation of the study variate on the auxiliaries,
// computed from the error-free moment matrix. Requires c0 > 0.
RSquaredResult multiple_correlation_sq(const PopulationSpec& spec);

// (p+1) x (p+1) covariance of the true variates implied by the spec, study
// variate first.
Eigen::MatrixXd synthesize_covariance(const PopulationSpec& spec);

// Factor M with M * M^T == cov, via a pivoted symmetric factorization with
// tiny negative pivots clamped to zero. Throws std::runtime_error when cov
// is not PSD within tolerance.
Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov);

// Solves A x = rhs for symmetric PSD A, rejecting near-singular input;
// `label` names the matrix in the error message.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs,
                          const std::string& label);

}  // namespace meerr
