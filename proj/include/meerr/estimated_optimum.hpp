#pragma once

#include <Eigen/Dense>

#include "meerr/simulate.hpp"

namespace meerr {

// Sample counterparts of the moment structure, scaled the same way as the
// population quantities, plus the plug-in coefficient vector solved from
// them.
struct MomentEstimates {
    Eigen::MatrixXd A_hat;
    Eigen::VectorXd b_hat;
    double mu0_hat = 0.0;      // observed study mean
    Eigen::VectorXd phi_hat;   // solution of A_hat phi = b_hat
};

// Estimates the moment structure from one observed sample. Requires at
// least 3 rows and strictly positive sample variances; throws
// std::runtime_error when the sample is degenerate or A_hat is singular.
MomentEstimates estimate_moments(const ObservedSample& sample, const Eigen::VectorXd& mu);

// Difference-type estimate with the optimum coefficients replaced by their
// sample plug-ins: y_bar (1 - phi_hat . (u - 1)). First-order MSE matches
// the known-coefficient optimum.
double estimated_optimum_estimate(const ObservedSample& sample, const Eigen::VectorXd& mu);

}  // namespace meerr
