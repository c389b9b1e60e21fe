#pragma once

#include "meerr/estimators.hpp"
#include "meerr/population.hpp"

namespace meerr {

// Decomposition of the MSE coefficient: n * MSE / mu0^2 = base + cross + quad.
// base is the contribution of the study variate alone, cross the coupling
// with the auxiliaries, quad the quadratic cost of the adjustment.
struct MseParts {
    double base = 0.0;    // c0^2 + c0_err^2
    double cross = 0.0;   // 2 b . d
    double quad = 0.0;    // d . A d
};

// First-order accuracy of one member at sample size n, in both absolute
// (MSE, bias) and coefficient (n * MSE, n * bias) form.
struct TheoryResult {
    double mse = 0.0;
    double bias = 0.0;
    double n_mse = 0.0;
    double n_bias = 0.0;
    long n = 0;
    MseParts parts;
};

// MSE of the member with derivative profile `profile`, correct to order 1/n.
double mse_first_order(const DerivativeProfile& profile, const MomentMatrices& mm,
                       const PopulationSpec& spec, long n);

// Leading bias term, driven by the curvature H and the cross partials c.
double bias_first_order(const DerivativeProfile& profile, const MomentMatrices& mm,
                        const PopulationSpec& spec, long n);

TheoryResult theory_result(const DerivativeProfile& profile, const MomentMatrices& mm,
                           const PopulationSpec& spec, long n);

// Smallest first-order MSE attainable inside the family (gradient chosen
// freely), under measurement error.
double min_mse(const MomentMatrices& mm, const PopulationSpec& spec, long n);

// Same bound with all measurement error switched off; equals the classical
// regression bound sigma0^2 (1 - R^2) / n.
double min_mse_no_error(const MomentMatrices& mm, const PopulationSpec& spec, long n);

// MSE of the unadjusted sample mean of the fallible observations.
double variance_plain_mean(const PopulationSpec& spec, long n);

// Increase of the optimal MSE caused by measurement error alone.
double error_penalty(const MomentMatrices& mm, const PopulationSpec& spec, long n);

}  // namespace meerr
