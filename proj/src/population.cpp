#include "meerr/population.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace meerr {

namespace {

bool finite_all(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Covariance implied by the spec without any validity guarantees; callers
// check the result. Study variate occupies row/column 0.
Eigen::MatrixXd covariance_unchecked(const PopulationSpec& spec) {
    const int p = spec.p();
    Eigen::VectorXd sigma(p + 1);
    sigma(0) = spec.c0 * std::abs(spec.mu0);
    for (int i = 0; i < p; ++i) sigma(i + 1) = spec.c(i) * std::abs(spec.mu(i));

    Eigen::MatrixXd cov(p + 1, p + 1);
    cov(0, 0) = sigma(0) * sigma(0);
    for (int i = 0; i < p; ++i) {
        cov(0, i + 1) = cov(i + 1, 0) = spec.rho0(i) * sigma(0) * sigma(i + 1);
        for (int j = 0; j < p; ++j) {
            cov(i + 1, j + 1) = (i == j) ? sigma(i + 1) * sigma(i + 1)
                                         : spec.rho(i, j) * sigma(i + 1) * sigma(j + 1);
        }
    }
    return cov;
}

}  // namespace

ValidationReport validate_spec(const PopulationSpec& spec) {
    ValidationReport rep;
    auto fail = [&rep](const std::string& msg) {
        rep.ok = false;
        rep.violations.push_back(msg);
    };

    const int p = spec.p();
    if (p < 1) {
        fail("mu: need at least one auxiliary variate");
        return rep;
    }
    bool sized = true;
    auto check_len = [&](const Eigen::VectorXd& v, const char* name) {
        if (v.size() != p) {
            std::ostringstream os;
            os << name << ": expected length " << p << ", got " << v.size();
            fail(os.str());
            sized = false;
        }
    };
    check_len(spec.c, "c");
    check_len(spec.c_err, "c_err");
    check_len(spec.rho0, "rho0");
    if (spec.rho.rows() != p || spec.rho.cols() != p) {
        std::ostringstream os;
        os << "rho: expected " << p << "x" << p << ", got " << spec.rho.rows() << "x"
           << spec.rho.cols();
        fail(os.str());
        sized = false;
    }
    if (!sized) return rep;

    if (!std::isfinite(spec.mu0) || !std::isfinite(spec.c0) || !std::isfinite(spec.c0_err) ||
        !finite_all(spec.mu) || !finite_all(spec.c) || !finite_all(spec.c_err) ||
        !finite_all(spec.rho0) || !finite_all(spec.rho)) {
        fail("spec contains non-finite entries");
        return rep;
    }

    if (spec.mu0 == 0.0) fail("mu0: study mean zero");
    for (int i = 0; i < p; ++i) {
        if (spec.mu(i) == 0.0) {
            std::ostringstream os;
            os << "mu: auxiliary mean zero (index " << i + 1 << ")";
            fail(os.str());
        }
    }
    if (spec.c0 < 0.0) fail("c0: negative CV");
    if (spec.c0_err < 0.0) fail("c0_err: negative CV");
    for (int i = 0; i < p; ++i) {
        if (spec.c(i) < 0.0) {
            std::ostringstream os;
            os << "c: negative CV (index " << i + 1 << ")";
            fail(os.str());
        }
        if (spec.c_err(i) < 0.0) {
            std::ostringstream os;
            os << "c_err: negative CV (index " << i + 1 << ")";
            fail(os.str());
        }
    }
    for (int i = 0; i < p; ++i) {
        if (std::abs(spec.rho0(i)) > 1.0) {
            std::ostringstream os;
            os << "rho0: correlation outside [-1, 1] (index " << i + 1 << ")";
            fail(os.str());
        }
    }
    bool rho_ok = true;
    for (int i = 0; i < p; ++i) {
        if (spec.rho(i, i) != 1.0) {
            std::ostringstream os;
            os << "rho: diagonal entry not 1 (index " << i + 1 << ")";
            fail(os.str());
            rho_ok = false;
        }
        for (int j = 0; j < p; ++j) {
            if (std::abs(spec.rho(i, j)) > 1.0) {
                std::ostringstream os;
                os << "rho: correlation outside [-1, 1] at (" << i + 1 << ", " << j + 1 << ")";
                fail(os.str());
                rho_ok = false;
            }
            if (j > i && spec.rho(i, j) != spec.rho(j, i)) {
                std::ostringstream os;
                os << "rho: not symmetric at (" << i + 1 << ", " << j + 1 << ")";
                fail(os.str());
                rho_ok = false;
            }
        }
    }

    // Joint feasibility of the correlation structure: the implied covariance
    // must factor. Skipped when the entries are already out of range.
    if (rho_ok && rep.ok) {
        try {
            sampling_factor(covariance_unchecked(spec));
        } catch (const std::runtime_error&) {
            fail("rho: augmented correlation matrix not PSD");
        }
    }
    return rep;
}

void require_valid(const PopulationSpec& spec) {
    ValidationReport rep = validate_spec(spec);
    if (rep.ok) return;
    std::ostringstream os;
    os << "invalid population spec:";
    for (const auto& v : rep.violations) os << " [" << v << "]";
    throw std::invalid_argument(os.str());
}

MomentMatrices build_moments(const PopulationSpec& spec) {
    require_valid(spec);
    const int p = spec.p();
    MomentMatrices mm;
    mm.A.resize(p, p);
    mm.A_star.resize(p, p);
    mm.b.resize(p);
    mm.C_diag.resize(p);
    for (int i = 0; i < p; ++i) {
        mm.C_diag(i) = spec.c(i) * spec.c(i) + spec.c_err(i) * spec.c_err(i);
        mm.b(i) = spec.rho0(i) * spec.c0 * spec.c(i);
        for (int j = 0; j < p; ++j) {
            if (i == j) {
                mm.A(i, i) = mm.C_diag(i);
                mm.A_star(i, i) = spec.c(i) * spec.c(i);
            } else {
                double off = spec.rho(i, j) * spec.c(i) * spec.c(j);
                mm.A(i, j) = off;
                mm.A_star(i, j) = off;
            }
        }
    }
    return mm;
}

RSquaredResult multiple_correlation_sq(const PopulationSpec& spec) {
    require_valid(spec);
    if (spec.c0 <= 0.0)
        throw std::invalid_argument("multiple_correlation_sq: c0 must be positive");
    MomentMatrices mm = build_moments(spec);
    Eigen::VectorXd x = solve_spd(mm.A_star, mm.b, "error-free moment matrix");
    RSquaredResult r;
    r.value = mm.b.dot(x) / (spec.c0 * spec.c0);
    if (r.value < 0.0) {
        r.value = 0.0;
        r.clamped = true;
    } else if (r.value > 1.0) {
        r.value = 1.0;
        r.clamped = true;
    }
    return r;
}

Eigen::MatrixXd synthesize_covariance(const PopulationSpec& spec) {
    require_valid(spec);
    return covariance_unchecked(spec);
}

Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov) {
    if (cov.rows() != cov.cols() || cov.rows() == 0)
        throw std::invalid_argument("sampling_factor: matrix must be square and non-empty");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd d = ldlt.vectorD();
    if (d.minCoeff() < -kPsdPivotTol * scale)
        throw std::runtime_error("spec not PSD: covariance fails symmetric factorization");
    Eigen::VectorXd root = d.cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd m = Eigen::MatrixXd(ldlt.matrixL()) * root.asDiagonal();
    return ldlt.transpositionsP().transpose() * m;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs,
                          const std::string& label) {
    if (A.rows() != A.cols() || A.rows() != rhs.size())
        throw std::invalid_argument("solve_spd: dimension mismatch for " + label);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const double scale = std::max(A.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd d = ldlt.vectorD();
    if (d.minCoeff() <= 1e-12 * scale)
        throw std::runtime_error("singular moment matrix: " + label);
    return ldlt.solve(rhs);
}

}  // namespace meerr
