#include "meerr/estimated_optimum.hpp"

#include <cmath>
#include <stdexcept>

namespace meerr {

MomentEstimates estimate_moments(const ObservedSample& sample, const Eigen::VectorXd& mu) {
    const long n = sample.y.size();
    const int p = static_cast<int>(sample.x.cols());
    if (n < 3) throw std::invalid_argument("estimate_moments: need at least 3 rows");
    if (sample.x.rows() != n)
        throw std::invalid_argument("estimate_moments: row count mismatch");
    if (mu.size() != p) throw std::invalid_argument("estimate_moments: mu length mismatch");
    for (int i = 0; i < p; ++i)
        if (std::abs(mu(i)) < kTinyDenominator)
            throw std::invalid_argument("estimate_moments: auxiliary mean vanishes");

    const double inv_nm1 = 1.0 / static_cast<double>(n - 1);
    const double y_bar = sample.y.mean();
    const Eigen::VectorXd x_bar = sample.x.colwise().mean();

    const Eigen::VectorXd yc = sample.y.array() - y_bar;
    const Eigen::MatrixXd xc = sample.x.rowwise() - x_bar.transpose();

    const double s_yy = yc.squaredNorm() * inv_nm1;
    if (!(s_yy > 0.0)) throw std::runtime_error("estimate_moments: degenerate sample (zero variance)");
    if (std::abs(y_bar) < kTinyDenominator)
        throw std::runtime_error("estimate_moments: observed study mean vanishes");

    MomentEstimates est;
    est.mu0_hat = y_bar;
    est.A_hat.resize(p, p);
    est.b_hat.resize(p);
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            double s = xc.col(i).dot(xc.col(j)) * inv_nm1;
            est.A_hat(i, j) = est.A_hat(j, i) = s / (mu(i) * mu(j));
        }
        if (!(est.A_hat(i, i) > 0.0))
            throw std::runtime_error("estimate_moments: degenerate sample (zero variance)");
        est.b_hat(i) = yc.dot(xc.col(i)) * inv_nm1 / (y_bar * mu(i));
    }

    est.phi_hat = solve_spd(est.A_hat, est.b_hat, "estimated moment matrix");
    return est;
}

double estimated_optimum_estimate(const ObservedSample& sample, const Eigen::VectorXd& mu) {
    MomentEstimates est = estimate_moments(sample, mu);
    const Eigen::VectorXd x_bar = sample.x.colwise().mean();
    double adj = 0.0;
    for (int i = 0; i < mu.size(); ++i)
        adj += est.phi_hat(i) * (x_bar(i) / mu(i) - 1.0);
    return est.mu0_hat * (1.0 - adj);
}

}  // namespace meerr
