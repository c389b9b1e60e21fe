#pragma once

// Shared fixtures and small independent oracles for the test suites. The
// oracles deliberately avoid the library's own linear algebra paths: 2x2
// systems go through Cramer's rule, PSD checks through an eigensolver, and
// optima are confirmed by brute-force search, so the closed forms are
// checked against arithmetic that cannot share their bugs.

#include <cmath>
#include <random>
#include <vector>

#include "meerr/estimators.hpp"
#include "meerr/population.hpp"

namespace meerr::testing {

// Reference scenario used throughout: two auxiliaries, moderate error CVs.
//   A  = [0.05 0.025; 0.025 0.065], A* = [0.04 0.025; 0.025 0.0625]
//   b  = (0.036, 0.030)
inline PopulationSpec scenario_two_aux() {
    PopulationSpec spec;
    spec.mu0 = 20.0;
    spec.mu = Eigen::Vector2d(10.0, 8.0);
    spec.c0 = 0.3;
    spec.c = Eigen::Vector2d(0.2, 0.25);
    spec.c0_err = 0.1;
    spec.c_err = Eigen::Vector2d(0.1, 0.05);
    spec.rho0 = Eigen::Vector2d(0.6, 0.4);
    spec.rho.resize(2, 2);
    spec.rho << 1.0, 0.5, 0.5, 1.0;
    return spec;
}

// Same population without measurement error anywhere.
inline PopulationSpec scenario_two_aux_no_error() {
    PopulationSpec spec = scenario_two_aux();
    spec.c0_err = 0.0;
    spec.c_err = Eigen::Vector2d(0.0, 0.0);
    return spec;
}

inline Eigen::Vector2d cramer_solve2(const Eigen::Matrix2d& a, const Eigen::Vector2d& rhs) {
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    return Eigen::Vector2d((rhs(0) * a(1, 1) - a(0, 1) * rhs(1)) / det,
                           (a(0, 0) * rhs(1) - rhs(0) * a(1, 0)) / det);
}

inline double det3(const Eigen::Matrix3d& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// Eigenvalue-based PSD verdict, the independent counterpart of the
// factorization-based check inside the library.
inline bool psd_by_eigenvalues(const Eigen::MatrixXd& m, double tol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, m.diagonal().maxCoeff());
}

// Quadratic MSE coefficient evaluated with bare loops:
//   c0^2 + c0_err^2 + 2 sum_i b_i d_i + sum_ij d_i A_ij d_j.
inline double mse_coeff_by_loops(const Eigen::VectorXd& d, const Eigen::MatrixXd& a,
                                 const Eigen::VectorXd& b, double c0, double c0_err) {
    double acc = c0 * c0 + c0_err * c0_err;
    for (int i = 0; i < d.size(); ++i) acc += 2.0 * b(i) * d(i);
    for (int i = 0; i < d.size(); ++i)
        for (int j = 0; j < d.size(); ++j) acc += d(i) * a(i, j) * d(j);
    return acc;
}

// Bias coefficient by loops: (trace(H A) + 2 sum_i b_i c_i) / 2.
inline double bias_coeff_by_loops(const Eigen::MatrixXd& h, const Eigen::VectorXd& c,
                                  const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    double acc = 0.0;
    for (int i = 0; i < h.rows(); ++i)
        for (int j = 0; j < h.cols(); ++j) acc += h(i, j) * a(j, i);
    for (int i = 0; i < c.size(); ++i) acc += 2.0 * b(i) * c(i);
    return 0.5 * acc;
}

// Random correlation matrix of order m: normalized Gram matrix of gaussian
// columns, full rank with probability one.
inline Eigen::MatrixXd random_correlation(int m, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd z(m, m + 2);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m + 2; ++j) z(i, j) = normal(rng);
    Eigen::MatrixXd g = z * z.transpose();
    Eigen::VectorXd d = g.diagonal().cwiseSqrt();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) g(i, j) /= d(i) * d(j);
    for (int i = 0; i < m; ++i) g(i, i) = 1.0;
    return g;
}

// Random valid population spec with p auxiliaries; with_errors controls the
// measurement-error CVs. Means are kept positive so the same specs also
// serve the lognormal sampling tests.
inline PopulationSpec random_spec(int p, bool with_errors, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mean_dist(2.0, 30.0);
    std::uniform_real_distribution<double> cv_dist(0.05, 0.5);
    std::uniform_real_distribution<double> err_dist(0.02, 0.3);

    PopulationSpec spec;
    spec.mu0 = mean_dist(rng);
    spec.mu.resize(p);
    spec.c.resize(p);
    spec.c_err.resize(p);
    spec.rho0.resize(p);
    for (int i = 0; i < p; ++i) {
        spec.mu(i) = mean_dist(rng);
        spec.c(i) = cv_dist(rng);
        spec.c_err(i) = with_errors ? err_dist(rng) : 0.0;
    }
    spec.c0 = cv_dist(rng);
    spec.c0_err = with_errors ? err_dist(rng) : 0.0;

    Eigen::MatrixXd corr = random_correlation(p + 1, rng);
    spec.rho0 = corr.block(1, 0, p, 1);
    spec.rho = corr.block(1, 1, p, p);
    return spec;
}

// Uniform point on the unit-sum hyperplane, entries in roughly [-1, 2].
inline Eigen::VectorXd random_simplex_weights(int k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 2.0);
    Eigen::VectorXd w(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        w(i) = dist(rng);
        sum += w(i);
    }
    // Spread the closing correction over all entries to avoid one huge
    // weight when the raw sum is near zero.
    w.array() += (1.0 - sum) / k;
    return w;
}

// Random parameter block for a member; draws satisfy the member's
// constraints but are otherwise arbitrary.
inline EstimatorConfig random_config(EstimatorId id, int p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    EstimatorConfig cfg;
    cfg.id = id;
    switch (id) {
        case EstimatorId::Plain:
            break;
        case EstimatorId::M1: case EstimatorId::M2: case EstimatorId::M3:
        case EstimatorId::M4: case EstimatorId::M5: case EstimatorId::M6:
        case EstimatorId::M7: case EstimatorId::M8:
            cfg.omega = random_simplex_weights(p, rng);
            break;
        case EstimatorId::M9: case EstimatorId::M10:
            cfg.omega = random_simplex_weights(p + 1, rng);
            break;
        case EstimatorId::M11: {
            cfg.omega = random_simplex_weights(p, rng);
            std::uniform_int_distribution<int> qd(1, p - 1);
            cfg.q = qd(rng);
            break;
        }
        case EstimatorId::M12: case EstimatorId::M13: case EstimatorId::M14:
        case EstimatorId::M18: {
            Eigen::VectorXd a(p);
            for (int i = 0; i < p; ++i) a(i) = coef(rng);
            cfg.alpha = a;
            break;
        }
        case EstimatorId::M15: case EstimatorId::M16: {
            Eigen::VectorXd t(p);
            for (int i = 0; i < p; ++i) t(i) = coef(rng);
            cfg.theta = t;
            break;
        }
        case EstimatorId::M17: {
            Eigen::VectorXd w = random_simplex_weights(p, rng);
            for (int i = 0; i < p; ++i)
                if (std::abs(w(i)) < 0.05) w(i) = w(i) < 0.0 ? -0.05 : 0.05;
            w /= w.sum();
            cfg.omega = w;
            Eigen::VectorXd t(p);
            for (int i = 0; i < p; ++i) t(i) = coef(rng);
            cfg.theta = t;
            break;
        }
    }
    return cfg;
}

}  // namespace meerr::testing
