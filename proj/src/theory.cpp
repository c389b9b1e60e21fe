#include "meerr/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace meerr {

namespace {

void check_n(long n) {
    if (n < 1) throw std::invalid_argument("theory: sample size must be at least 1");
}

void check_shapes(const DerivativeProfile& profile, const MomentMatrices& mm) {
    const auto p = mm.A.rows();
    if (profile.d.size() != p || profile.c.size() != p || profile.H.rows() != p ||
        profile.H.cols() != p || mm.b.size() != p)
        throw std::invalid_argument("theory: profile and moment dimensions disagree");
}

}  // namespace

double mse_first_order(const DerivativeProfile& profile, const MomentMatrices& mm,
                       const PopulationSpec& spec, long n) {
    return theory_result(profile, mm, spec, n).mse;
}

double bias_first_order(const DerivativeProfile& profile, const MomentMatrices& mm,
                        const PopulationSpec& spec, long n) {
    return theory_result(profile, mm, spec, n).bias;
}

TheoryResult theory_result(const DerivativeProfile& profile, const MomentMatrices& mm,
                           const PopulationSpec& spec, long n) {
    check_n(n);
    check_shapes(profile, mm);

    TheoryResult r;
    r.n = n;
    r.parts.base = spec.c0 * spec.c0 + spec.c0_err * spec.c0_err;
    r.parts.cross = 2.0 * mm.b.dot(profile.d);
    r.parts.quad = profile.d.dot(mm.A * profile.d);
    r.n_mse = spec.mu0 * spec.mu0 * (r.parts.base + r.parts.cross + r.parts.quad);
    r.mse = r.n_mse / static_cast<double>(n);

    // trace(H A) reduces to an elementwise product because both are symmetric.
    double trace_ha = (profile.H.cwiseProduct(mm.A)).sum();
    r.n_bias = 0.5 * spec.mu0 * (trace_ha + 2.0 * mm.b.dot(profile.c));
    r.bias = r.n_bias / static_cast<double>(n);
    return r;
}

double min_mse(const MomentMatrices& mm, const PopulationSpec& spec, long n) {
    check_n(n);
    Eigen::VectorXd x = solve_spd(mm.A, mm.b, "moment matrix A");
    double coeff = spec.c0 * spec.c0 + spec.c0_err * spec.c0_err - mm.b.dot(x);
    return spec.mu0 * spec.mu0 * coeff / static_cast<double>(n);
}

double min_mse_no_error(const MomentMatrices& mm, const PopulationSpec& spec, long n) {
    check_n(n);
    Eigen::VectorXd x = solve_spd(mm.A_star, mm.b, "error-free moment matrix");
    double coeff = spec.c0 * spec.c0 - mm.b.dot(x);
    double value = spec.mu0 * spec.mu0 * coeff / static_cast<double>(n);

    if (spec.c0 > 0.0) {
        // Sanity identity: the bound is the plain regression bound
        // sigma0^2 (1 - R^2) / n. The two routes share the solve, so any
        // disagreement indicates a programming error, not round-off.
        double sigma0 = spec.c0 * std::abs(spec.mu0);
        double r2 = mm.b.dot(x) / (spec.c0 * spec.c0);
        double alt = sigma0 * sigma0 * (1.0 - r2) / static_cast<double>(n);
        if (std::abs(alt - value) > 1e-9 * std::max(1.0, std::abs(value)))
            throw std::logic_error("min_mse_no_error: regression-bound identity violated");
    }
    return value;
}

double variance_plain_mean(const PopulationSpec& spec, long n) {
    check_n(n);
    double coeff = spec.c0 * spec.c0 + spec.c0_err * spec.c0_err;
    return spec.mu0 * spec.mu0 * coeff / static_cast<double>(n);
}

double error_penalty(const MomentMatrices& mm, const PopulationSpec& spec, long n) {
    check_n(n);
    Eigen::VectorXd with_err = solve_spd(mm.A, mm.b, "moment matrix A");
    Eigen::VectorXd no_err = solve_spd(mm.A_star, mm.b, "error-free moment matrix");
    double coeff = spec.c0_err * spec.c0_err + mm.b.dot(no_err) - mm.b.dot(with_err);
    return spec.mu0 * spec.mu0 * coeff / static_cast<double>(n);
}

}  // namespace meerr
