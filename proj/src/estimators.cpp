#include "meerr/estimators.hpp"

#include <cmath>
#include <sstream>

namespace meerr {

namespace {

const char* kNames[] = {"PLAIN", "M1",  "M2",  "M3",  "M4",  "M5",  "M6",
                        "M7",    "M8",  "M9",  "M10", "M11", "M12", "M13",
                        "M14",   "M15", "M16", "M17", "M18"};

constexpr double kWeightSumTol = 1e-12;

[[noreturn]] void domain_fail(EstimatorId id, int variate, const std::string& what) {
    throw EvaluationDomainError(id, variate, what);
}

struct FieldRule {
    bool omega = false;
    bool alpha = false;
    bool theta = false;
    bool q = false;
};

FieldRule fields_for(EstimatorId id) {
    FieldRule r;
    switch (id) {
        case EstimatorId::Plain: break;
        case EstimatorId::M1: case EstimatorId::M2: case EstimatorId::M3:
        case EstimatorId::M4: case EstimatorId::M5: case EstimatorId::M6:
        case EstimatorId::M7: case EstimatorId::M8: case EstimatorId::M9:
        case EstimatorId::M10:
            r.omega = true;
            break;
        case EstimatorId::M11:
            r.omega = true;
            r.q = true;
            break;
        case EstimatorId::M12: case EstimatorId::M13: case EstimatorId::M14:
        case EstimatorId::M18:
            r.alpha = true;
            break;
        case EstimatorId::M15: case EstimatorId::M16:
            r.theta = true;
            break;
        case EstimatorId::M17:
            r.omega = true;
            r.theta = true;
            break;
    }
    return r;
}

// u_i = x_bar_i / mu_i, guarding against a vanished true mean.
Eigen::VectorXd scaled_means(EstimatorId id, const SampleSummary& s, const Eigen::VectorXd& mu) {
    Eigen::VectorXd u(mu.size());
    for (int i = 0; i < mu.size(); ++i) {
        if (std::abs(mu(i)) < kTinyDenominator)
            domain_fail(id, i + 1, "auxiliary mean vanishes");
        u(i) = s.x_bar(i) / mu(i);
    }
    return u;
}

double checked_ratio(EstimatorId id, double num, double den, int variate) {
    if (std::abs(den) < kTinyDenominator) domain_fail(id, variate, "vanishing denominator");
    return num / den;
}

double positive_base(EstimatorId id, double u, int variate) {
    if (!(u > 0.0)) domain_fail(id, variate, "nonpositive ratio under power or log");
    return u;
}

}  // namespace

const char* to_string(EstimatorId id) { return kNames[static_cast<int>(id)]; }

std::optional<EstimatorId> parse_estimator_id(const std::string& name) {
    for (int i = 0; i < static_cast<int>(std::size(kNames)); ++i)
        if (name == kNames[i]) return static_cast<EstimatorId>(i);
    return std::nullopt;
}

const std::vector<EstimatorId>& all_estimators() {
    static const std::vector<EstimatorId> ids = [] {
        std::vector<EstimatorId> v;
        for (int i = 0; i < static_cast<int>(std::size(kNames)); ++i)
            v.push_back(static_cast<EstimatorId>(i));
        return v;
    }();
    return ids;
}

EvaluationDomainError::EvaluationDomainError(EstimatorId id_, int variate_,
                                             const std::string& what_)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << to_string(id_) << ": " << what_;
          if (variate_ > 0) os << " (variate " << variate_ << ")";
          return os.str();
      }()),
      id(id_),
      variate(variate_) {}

ValidationReport validate_config(const EstimatorConfig& cfg, int p) {
    ValidationReport rep;
    auto fail = [&rep](const std::string& msg) {
        rep.ok = false;
        rep.violations.push_back(msg);
    };
    if (p < 1) {
        fail("config: need at least one auxiliary variate");
        return rep;
    }
    const FieldRule rule = fields_for(cfg.id);

    if (rule.omega != cfg.omega.has_value())
        fail(rule.omega ? "omega: required for this member" : "omega: not used by this member");
    if (rule.alpha != cfg.alpha.has_value())
        fail(rule.alpha ? "alpha: required for this member" : "alpha: not used by this member");
    if (rule.theta != cfg.theta.has_value())
        fail(rule.theta ? "theta: required for this member" : "theta: not used by this member");
    if (rule.q != cfg.q.has_value())
        fail(rule.q ? "q: required for this member" : "q: not used by this member");
    if (!rep.ok) return rep;

    const bool extended = cfg.id == EstimatorId::M9 || cfg.id == EstimatorId::M10;
    if (cfg.omega) {
        const int want = extended ? p + 1 : p;
        if (cfg.omega->size() != want) {
            std::ostringstream os;
            os << "omega: expected length " << want << ", got " << cfg.omega->size();
            fail(os.str());
        } else if (!cfg.omega->allFinite()) {
            fail("omega: non-finite entry");
        } else {
            double wsum = cfg.omega->sum();
            if (std::abs(wsum - 1.0) > kWeightSumTol) {
                std::ostringstream os;
                os << "omega: must sum to 1 (got " << wsum << ")";
                fail(os.str());
            }
            if (cfg.id == EstimatorId::M17) {
                for (int i = 0; i < p; ++i)
                    if ((*cfg.omega)(i) == 0.0) {
                        std::ostringstream os;
                        os << "omega: entry " << i + 1 << " must be nonzero";
                        fail(os.str());
                    }
            }
        }
    }
    auto check_vec = [&](const std::optional<Eigen::VectorXd>& v, const char* name) {
        if (!v) return;
        if (v->size() != p) {
            std::ostringstream os;
            os << name << ": expected length " << p << ", got " << v->size();
            fail(os.str());
        } else if (!v->allFinite()) {
            fail(std::string(name) + ": non-finite entry");
        }
    };
    check_vec(cfg.alpha, "alpha");
    check_vec(cfg.theta, "theta");
    if (cfg.q) {
        if (p < 2) fail("q: split form needs at least two auxiliaries");
        else if (*cfg.q < 1 || *cfg.q >= p) {
            std::ostringstream os;
            os << "q: must lie in [1, " << p - 1 << "], got " << *cfg.q;
            fail(os.str());
        }
    }
    return rep;
}

void require_valid(const EstimatorConfig& cfg, int p) {
    ValidationReport rep = validate_config(cfg, p);
    if (rep.ok) return;
    std::ostringstream os;
    os << "invalid estimator config for " << to_string(cfg.id) << ":";
    for (const auto& v : rep.violations) os << " [" << v << "]";
    throw std::invalid_argument(os.str());
}

double evaluate(const EstimatorConfig& cfg, const SampleSummary& s, const Eigen::VectorXd& mu) {
    const int p = static_cast<int>(mu.size());
    require_valid(cfg, p);
    if (s.n < 2) throw std::invalid_argument("evaluate: sample size must be at least 2");
    if (s.x_bar.size() != p) throw std::invalid_argument("evaluate: x_bar length mismatch");
    if (!std::isfinite(s.y_bar) || !s.x_bar.allFinite())
        throw std::invalid_argument("evaluate: non-finite sample means");

    const EstimatorId id = cfg.id;
    const double y = s.y_bar;
    double value = 0.0;

    switch (id) {
        case EstimatorId::Plain:
            value = y;
            break;
        case EstimatorId::M1: {
            double acc = 0.0;
            for (int i = 0; i < p; ++i)
                acc += (*cfg.omega)(i) * checked_ratio(id, mu(i), s.x_bar(i), i + 1);
            value = y * acc;
            break;
        }
        case EstimatorId::M2: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            value = y * cfg.omega->dot(u);
            break;
        }
        case EstimatorId::M3: {
            double den = cfg.omega->dot(s.x_bar);
            value = y * checked_ratio(id, cfg.omega->dot(mu), den, 0);
            break;
        }
        case EstimatorId::M4: {
            double den = cfg.omega->dot(mu);
            value = y * checked_ratio(id, cfg.omega->dot(s.x_bar), den, 0);
            break;
        }
        case EstimatorId::M5: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double prod = 1.0;
            for (int i = 0; i < p; ++i)
                prod *= std::pow(positive_base(id, u(i), i + 1), -(*cfg.omega)(i));
            value = y * prod;
            break;
        }
        case EstimatorId::M6: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            value = y * checked_ratio(id, 1.0, cfg.omega->dot(u), 0);
            break;
        }
        case EstimatorId::M7: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double prod = 1.0;
            for (int i = 0; i < p; ++i)
                prod *= std::pow(positive_base(id, u(i), i + 1), (*cfg.omega)(i));
            value = y * prod;
            break;
        }
        case EstimatorId::M8: {
            double acc = 0.0;
            for (int i = 0; i < p; ++i)
                acc += (*cfg.omega)(i) * checked_ratio(id, mu(i), s.x_bar(i), i + 1);
            value = y * checked_ratio(id, 1.0, acc, 0);
            break;
        }
        case EstimatorId::M9: {
            double acc = (*cfg.omega)(p);
            for (int i = 0; i < p; ++i)
                acc += (*cfg.omega)(i) * checked_ratio(id, mu(i), s.x_bar(i), i + 1);
            value = y * acc;
            break;
        }
        case EstimatorId::M10: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double acc = (*cfg.omega)(p);
            for (int i = 0; i < p; ++i) acc += (*cfg.omega)(i) * u(i);
            value = y * acc;
            break;
        }
        case EstimatorId::M11: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            const int q = *cfg.q;
            double acc = 0.0;
            for (int i = 0; i < q; ++i)
                acc += (*cfg.omega)(i) * checked_ratio(id, 1.0, u(i), i + 1);
            for (int i = q; i < p; ++i) acc += (*cfg.omega)(i) * u(i);
            value = y * acc;
            break;
        }
        case EstimatorId::M12: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double prod = 1.0;
            for (int i = 0; i < p; ++i)
                prod *= std::pow(positive_base(id, u(i), i + 1), (*cfg.alpha)(i));
            value = y * prod;
            break;
        }
        case EstimatorId::M13: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double prod = 1.0;
            for (int i = 0; i < p; ++i)
                prod *= 2.0 - std::pow(positive_base(id, u(i), i + 1), (*cfg.alpha)(i));
            value = y * prod;
            break;
        }
        case EstimatorId::M14: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double prod = 1.0;
            for (int i = 0; i < p; ++i) {
                double den = 1.0 + (*cfg.alpha)(i) * (u(i) - 1.0);
                prod *= checked_ratio(id, u(i), den, i + 1);
            }
            value = y * prod;
            break;
        }
        case EstimatorId::M15: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double acc = 0.0;
            for (int i = 0; i < p; ++i)
                acc += (*cfg.theta)(i) * std::log(positive_base(id, u(i), i + 1));
            value = y * std::exp(acc);
            break;
        }
        case EstimatorId::M16: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double acc = 0.0;
            for (int i = 0; i < p; ++i) acc += (*cfg.theta)(i) * (u(i) - 1.0);
            value = y * std::exp(acc);
            break;
        }
        case EstimatorId::M17: {
            Eigen::VectorXd u = scaled_means(id, s, mu);
            double acc = 0.0;
            for (int i = 0; i < p; ++i) {
                double expo = (*cfg.theta)(i) / (*cfg.omega)(i);
                acc += (*cfg.omega)(i) * std::pow(positive_base(id, u(i), i + 1), expo);
            }
            value = y * acc;
            break;
        }
        case EstimatorId::M18: {
            double acc = y;
            for (int i = 0; i < p; ++i) acc += (*cfg.alpha)(i) * (s.x_bar(i) - mu(i));
            value = acc;
            break;
        }
    }

    if (!std::isfinite(value)) domain_fail(id, 0, "non-finite result");
    return value;
}

DerivativeProfile derivative_profile(const EstimatorConfig& cfg, double mu0,
                                     const Eigen::VectorXd& mu) {
    const int p = static_cast<int>(mu.size());
    require_valid(cfg, p);
    if (std::abs(mu0) < kTinyDenominator)
        domain_fail(cfg.id, 0, "study mean vanishes");

    DerivativeProfile pr;
    pr.d = Eigen::VectorXd::Zero(p);
    pr.H = Eigen::MatrixXd::Zero(p, p);
    pr.c = Eigen::VectorXd::Zero(p);

    auto head = [&](const Eigen::VectorXd& w) { return w.head(p).eval(); };

    switch (cfg.id) {
        case EstimatorId::Plain:
            break;
        case EstimatorId::M1: {
            pr.d = -(*cfg.omega);
            Eigen::VectorXd twice = 2.0 * *cfg.omega;
            pr.H = twice.asDiagonal();
            break;
        }
        case EstimatorId::M2:
            pr.d = *cfg.omega;
            break;
        case EstimatorId::M3: {
            double s = cfg.omega->dot(mu);
            if (std::abs(s) < kTinyDenominator)
                domain_fail(cfg.id, 0, "weighted auxiliary mean vanishes");
            Eigen::VectorXd w = cfg.omega->cwiseProduct(mu) / s;
            pr.d = -w;
            pr.H = 2.0 * w * w.transpose();
            break;
        }
        case EstimatorId::M4: {
            double s = cfg.omega->dot(mu);
            if (std::abs(s) < kTinyDenominator)
                domain_fail(cfg.id, 0, "weighted auxiliary mean vanishes");
            pr.d = cfg.omega->cwiseProduct(mu) / s;
            break;
        }
        case EstimatorId::M5:
            pr.d = -(*cfg.omega);
            pr.H = *cfg.omega * cfg.omega->transpose();
            pr.H += Eigen::MatrixXd(cfg.omega->asDiagonal());
            break;
        case EstimatorId::M6:
            pr.d = -(*cfg.omega);
            pr.H = 2.0 * *cfg.omega * cfg.omega->transpose();
            break;
        case EstimatorId::M7:
            pr.d = *cfg.omega;
            pr.H = *cfg.omega * cfg.omega->transpose();
            pr.H -= Eigen::MatrixXd(cfg.omega->asDiagonal());
            break;
        case EstimatorId::M8:
            pr.d = *cfg.omega;
            pr.H = 2.0 * (*cfg.omega * cfg.omega->transpose());
            pr.H -= 2.0 * Eigen::MatrixXd(cfg.omega->asDiagonal());
            break;
        case EstimatorId::M9: {
            pr.d = -head(*cfg.omega);
            Eigen::VectorXd twice = 2.0 * head(*cfg.omega);
            pr.H = twice.asDiagonal();
            break;
        }
        case EstimatorId::M10:
            pr.d = head(*cfg.omega);
            break;
        case EstimatorId::M11: {
            const int q = *cfg.q;
            for (int i = 0; i < p; ++i) pr.d(i) = (i < q) ? -(*cfg.omega)(i) : (*cfg.omega)(i);
            for (int i = 0; i < q; ++i) pr.H(i, i) = 2.0 * (*cfg.omega)(i);
            break;
        }
        case EstimatorId::M12: {
            const Eigen::VectorXd& a = *cfg.alpha;
            pr.d = a;
            pr.H = a * a.transpose();
            pr.H.diagonal() -= a;
            break;
        }
        case EstimatorId::M13: {
            const Eigen::VectorXd& a = *cfg.alpha;
            pr.d = -a;
            pr.H = a * a.transpose();
            for (int i = 0; i < p; ++i) pr.H(i, i) = -a(i) * (a(i) - 1.0);
            break;
        }
        case EstimatorId::M14: {
            Eigen::VectorXd m = Eigen::VectorXd::Ones(p) - *cfg.alpha;
            pr.d = m;
            pr.H = m * m.transpose();
            for (int i = 0; i < p; ++i) pr.H(i, i) = -2.0 * (1.0 - m(i)) * m(i);
            break;
        }
        case EstimatorId::M15: {
            const Eigen::VectorXd& t = *cfg.theta;
            pr.d = t;
            pr.H = t * t.transpose();
            pr.H.diagonal() -= t;
            break;
        }
        case EstimatorId::M16: {
            const Eigen::VectorXd& t = *cfg.theta;
            pr.d = t;
            pr.H = t * t.transpose();
            break;
        }
        case EstimatorId::M17: {
            for (int i = 0; i < p; ++i) {
                double t = (*cfg.theta)(i);
                pr.d(i) = t;
                pr.H(i, i) = t * (t / (*cfg.omega)(i) - 1.0);
            }
            break;
        }
        case EstimatorId::M18:
            // Linear in the observations: no curvature and, because the
            // adjustment does not touch the mean term, no cross partials.
            for (int i = 0; i < p; ++i) pr.d(i) = (*cfg.alpha)(i) * mu(i) / mu0;
            pr.c = Eigen::VectorXd::Zero(p);
            return pr;
    }

    // For every multiplicative member the mean enters as a plain factor, so
    // the cross partials equal the scaled gradient.
    pr.c = (cfg.id == EstimatorId::Plain) ? Eigen::VectorXd::Zero(p) : pr.d;
    return pr;
}

DerivativeProfile numeric_profile(const EstimatorConfig& cfg, double mu0,
                                  const Eigen::VectorXd& mu, double h) {
    const int p = static_cast<int>(mu.size());
    require_valid(cfg, p);
    if (!(h > 0.0)) throw std::invalid_argument("numeric_profile: step must be positive");

    auto f = [&](double ybar, const Eigen::VectorXd& u) {
        SampleSummary s;
        s.y_bar = ybar;
        s.x_bar = u.cwiseProduct(mu);
        s.n = 2;
        return evaluate(cfg, s, mu);
    };

    const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(p);
    // Five-point first-derivative weights at offsets -2h..2h, divisor 12h.
    const double off[4] = {-2.0, -1.0, 1.0, 2.0};
    const double w1[4] = {1.0, -8.0, 8.0, -1.0};

    auto du = [&](double ybar, int i) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
            Eigen::VectorXd u = u0;
            u(i) += off[k] * h;
            acc += w1[k] * f(ybar, u);
        }
        return acc / (12.0 * h);
    };

    DerivativeProfile pr;
    pr.d.resize(p);
    pr.H.resize(p, p);
    pr.c.resize(p);

    const double f0 = f(mu0, u0);
    for (int i = 0; i < p; ++i) {
        pr.d(i) = du(mu0, i) / mu0;

        // Five-point second derivative on the diagonal, divisor 12h^2.
        double acc = -30.0 * f0;
        for (int k = 0; k < 4; ++k) {
            Eigen::VectorXd u = u0;
            u(i) += off[k] * h;
            acc += (std::abs(off[k]) == 2.0 ? -1.0 : 16.0) * f(mu0, u);
        }
        pr.H(i, i) = acc / (12.0 * h * h) / mu0;

        for (int j = i + 1; j < p; ++j) {
            double acc2 = 0.0;
            for (int a = 0; a < 4; ++a)
                for (int bkl = 0; bkl < 4; ++bkl) {
                    Eigen::VectorXd u = u0;
                    u(i) += off[a] * h;
                    u(j) += off[bkl] * h;
                    acc2 += w1[a] * w1[bkl] * f(mu0, u);
                }
            pr.H(i, j) = pr.H(j, i) = acc2 / (144.0 * h * h) / mu0;
        }

        const double k = h * std::max(1.0, std::abs(mu0));
        pr.c(i) = (du(mu0 + k, i) - du(mu0 - k, i)) / (2.0 * k);
    }
    return pr;
}

EstimatorConfig optimal_params(EstimatorId id, const PopulationSpec& spec,
                               const MomentMatrices& mm, std::optional<int> q) {
    require_valid(spec);
    const int p = spec.p();
    if (id == EstimatorId::Plain)
        throw std::invalid_argument("optimal_params: PLAIN has no parameters");
    if (id == EstimatorId::M11 && !q)
        throw std::invalid_argument("optimal_params: M11 needs the split point q");

    // Unconstrained minimiser of the quadratic MSE form in d.
    const Eigen::VectorXd ainv_b = solve_spd(mm.A, mm.b, "moment matrix A");

    // Minimiser of the same quadratic subject to s . d = target.
    auto constrained = [&](const Eigen::VectorXd& s, double target) {
        Eigen::VectorXd ainv_s = solve_spd(mm.A, s, "moment matrix A");
        double denom = s.dot(ainv_s);
        if (std::abs(denom) < kTinyDenominator)
            throw std::runtime_error("optimal_params: degenerate constraint direction");
        double lambda = (target + s.dot(ainv_b)) / denom;
        return (lambda * ainv_s - ainv_b).eval();
    };

    EstimatorConfig cfg;
    cfg.id = id;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);

    switch (id) {
        case EstimatorId::Plain:
            break;
        case EstimatorId::M1:
        case EstimatorId::M5:
        case EstimatorId::M6:
            // d = -omega with weights summing to 1.
            cfg.omega = -constrained(ones, -1.0);
            break;
        case EstimatorId::M2:
        case EstimatorId::M7:
        case EstimatorId::M8:
            // d = +omega with weights summing to 1.
            cfg.omega = constrained(ones, 1.0);
            break;
        case EstimatorId::M3: {
            // d = -omega_i mu_i / (omega . mu); invert the map from the
            // constrained solution with sum(d) = -1.
            Eigen::VectorXd d = constrained(ones, -1.0);
            Eigen::VectorXd w = -d.cwiseQuotient(spec.mu);
            cfg.omega = w / w.sum();
            break;
        }
        case EstimatorId::M4: {
            Eigen::VectorXd d = constrained(ones, 1.0);
            Eigen::VectorXd w = d.cwiseQuotient(spec.mu);
            cfg.omega = w / w.sum();
            break;
        }
        case EstimatorId::M9: {
            // Free leading weights, affine term absorbs the slack.
            Eigen::VectorXd w(p + 1);
            w.head(p) = ainv_b;
            w(p) = 1.0 - w.head(p).sum();
            cfg.omega = w;
            break;
        }
        case EstimatorId::M10: {
            Eigen::VectorXd w(p + 1);
            w.head(p) = -ainv_b;
            w(p) = 1.0 - w.head(p).sum();
            cfg.omega = w;
            break;
        }
        case EstimatorId::M11: {
            const int split = *q;
            if (split < 1 || split >= p)
                throw std::invalid_argument("optimal_params: q out of range for M11");
            Eigen::VectorXd s(p);
            for (int i = 0; i < p; ++i) s(i) = (i < split) ? -1.0 : 1.0;
            Eigen::VectorXd d = constrained(s, 1.0);
            Eigen::VectorXd w(p);
            for (int i = 0; i < p; ++i) w(i) = (i < split) ? -d(i) : d(i);
            cfg.omega = w;
            cfg.q = split;
            break;
        }
        case EstimatorId::M12:
            cfg.alpha = -ainv_b;
            break;
        case EstimatorId::M13:
            cfg.alpha = ainv_b;
            break;
        case EstimatorId::M14:
            cfg.alpha = ones + ainv_b;
            break;
        case EstimatorId::M15:
            cfg.theta = -ainv_b;
            break;
        case EstimatorId::M16:
            cfg.theta = -ainv_b;
            break;
        case EstimatorId::M17:
            // The weights only shape the curvature; equal weights keep every
            // entry nonzero and the gradient free.
            cfg.omega = ones / p;
            cfg.theta = -ainv_b;
            break;
        case EstimatorId::M18:
            cfg.alpha = (-spec.mu0 * ainv_b.array() / spec.mu.array()).matrix();
            break;
    }

    require_valid(cfg, p);
    return cfg;
}

}  // namespace meerr
