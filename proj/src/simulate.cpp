#include "meerr/simulate.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "meerr/rng.hpp"

namespace meerr {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Stream tags: one engine for the true variates, one for the errors, so a
// scenario with errors switched off draws the same true values as its twin.
constexpr std::uint64_t kTrueStream = 0;
constexpr std::uint64_t kErrorStream = 1;

double pairwise_mean(const double* v, std::size_t len) {
    return pairwise_sum(v, len) / static_cast<double>(len);
}

}  // namespace

double pairwise_sum(const double* v, std::size_t len) {
    if (len <= 64) {
        double acc = 0.0;
        for (std::size_t i = 0; i < len; ++i) acc += v[i];
        return acc;
    }
    const std::size_t half = len / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, len - half);
}

SampleSummary ObservedSample::summary() const {
    SampleSummary s;
    s.n = y.size();
    s.y_bar = pairwise_mean(y.data(), y.size());
    s.x_bar.resize(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i)
        s.x_bar(i) = pairwise_mean(x.col(i).data(), x.rows());
    return s;
}

SampleSummary ObservedSample::summary_true() const {
    SampleSummary s;
    s.n = y_true.size();
    s.y_bar = pairwise_mean(y_true.data(), y_true.size());
    s.x_bar.resize(x_true.cols());
    for (Eigen::Index i = 0; i < x_true.cols(); ++i)
        s.x_bar(i) = pairwise_mean(x_true.col(i).data(), x_true.rows());
    return s;
}

ValidationReport validate_scenario(const SimulationScenario& scenario) {
    ValidationReport rep = validate_spec(scenario.population);
    auto fail = [&rep](const std::string& msg) {
        rep.ok = false;
        rep.violations.push_back(msg);
    };
    if (scenario.n < 2) fail("n: sample size must be at least 2");
    if (scenario.replications < 100) fail("replications: need at least 100");
    if (scenario.distribution == Distribution::Lognormal) {
        if (scenario.population.mu0 <= 0.0)
            fail("distribution: lognormal needs a positive study mean");
        for (int i = 0; i < scenario.population.p(); ++i)
            if (scenario.population.mu(i) <= 0.0) {
                std::ostringstream os;
                os << "distribution: lognormal needs positive auxiliary means (index "
                   << i + 1 << ")";
                fail(os.str());
            }
    }
    for (std::size_t k = 0; k < scenario.estimators.size(); ++k) {
        ValidationReport er = validate_config(scenario.estimators[k], scenario.population.p());
        for (const auto& v : er.violations) {
            std::ostringstream os;
            os << "estimators[" << k << "]: " << v;
            fail(os.str());
        }
    }
    return rep;
}

void require_valid(const SimulationScenario& scenario) {
    ValidationReport rep = validate_scenario(scenario);
    if (rep.ok) return;
    std::ostringstream os;
    os << "invalid simulation scenario:";
    for (const auto& v : rep.violations) os << " [" << v << "]";
    throw std::invalid_argument(os.str());
}

SamplerPlan make_sampler_plan(const SimulationScenario& scenario) {
    require_valid(scenario);
    const PopulationSpec& spec = scenario.population;
    const int p = spec.p();

    SamplerPlan plan;
    plan.p = p;
    plan.n = scenario.n;
    plan.distribution = scenario.distribution;

    Eigen::MatrixXd cov = synthesize_covariance(spec);
    if (scenario.distribution == Distribution::Gaussian) {
        plan.mean.resize(p + 1);
        plan.mean(0) = spec.mu0;
        plan.mean.tail(p) = spec.mu;
        plan.factor = sampling_factor(cov);
    } else {
        // Match the first two moments: a lognormal vector with mean m and
        // covariance cov has log-scale covariance log(1 + cov_ij / (m_i m_j)).
        Eigen::VectorXd m(p + 1);
        m(0) = spec.mu0;
        m.tail(p) = spec.mu;
        Eigen::MatrixXd s(p + 1, p + 1);
        for (int i = 0; i <= p; ++i)
            for (int j = 0; j <= p; ++j) {
                double g = 1.0 + cov(i, j) / (m(i) * m(j));
                if (g <= 0.0)
                    throw std::runtime_error(
                        "lognormal moment matching infeasible: correlation too negative");
                s(i, j) = std::log(g);
            }
        try {
            plan.log_factor = sampling_factor(s);
        } catch (const std::runtime_error&) {
            throw std::runtime_error(
                "lognormal moment matching infeasible: implied log covariance not PSD");
        }
        plan.log_mean = m.array().log().matrix() - 0.5 * s.diagonal();
    }

    plan.err_sd0 = spec.c0_err * std::abs(spec.mu0);
    plan.err_sd.resize(p);
    for (int i = 0; i < p; ++i) plan.err_sd(i) = spec.c_err(i) * std::abs(spec.mu(i));
    return plan;
}

ObservedSample draw_sample(const SamplerPlan& plan, std::uint64_t seed, long index) {
    const int p = plan.p;
    const long n = plan.n;
    NormalSampler truth(substream_seed(seed, static_cast<std::uint64_t>(index), kTrueStream));
    NormalSampler noise(substream_seed(seed, static_cast<std::uint64_t>(index), kErrorStream));

    ObservedSample s;
    s.y.resize(n);
    s.y_true.resize(n);
    s.x.resize(n, p);
    s.x_true.resize(n, p);

    Eigen::VectorXd z(p + 1);
    Eigen::VectorXd row(p + 1);
    for (long j = 0; j < n; ++j) {
        for (int i = 0; i <= p; ++i) z(i) = truth();
        if (plan.distribution == Distribution::Gaussian) {
            row = plan.mean + plan.factor * z;
        } else {
            row = (plan.log_mean + plan.log_factor * z).array().exp().matrix();
        }
        s.y_true(j) = row(0);
        for (int i = 0; i < p; ++i) s.x_true(j, i) = row(i + 1);

        s.y(j) = s.y_true(j) + (plan.err_sd0 > 0.0 ? plan.err_sd0 * noise() : 0.0);
        for (int i = 0; i < p; ++i)
            s.x(j, i) = s.x_true(j, i) + (plan.err_sd(i) > 0.0 ? plan.err_sd(i) * noise() : 0.0);
    }
    return s;
}

ObservedSample draw_sample(const SimulationScenario& scenario, long index) {
    if (index < 0 || index >= scenario.replications)
        throw std::invalid_argument("draw_sample: replication index out of range");
    return draw_sample(make_sampler_plan(scenario), scenario.seed, index);
}

EmpiricalStats run_functionals(const SimulationScenario& scenario,
                               const std::vector<Functional>& functionals, int threads) {
    if (threads < 1) throw std::invalid_argument("run_functionals: thread count must be >= 1");
    const SamplerPlan plan = make_sampler_plan(scenario);
    const long m = scenario.replications;
    const std::size_t k = functionals.size();

    // Every replication writes its own slots; the buffer layout is fixed, so
    // the aggregation below never sees thread order.
    std::vector<double> values(static_cast<std::size_t>(m) * k, kNan);

    auto worker = [&](long lo, long hi) {
        for (long idx = lo; idx < hi; ++idx) {
            ObservedSample sample = draw_sample(plan, scenario.seed, idx);
            SampleSummary summary = sample.summary();
            for (std::size_t j = 0; j < k; ++j) {
                double v = kNan;
                try {
                    v = functionals[j].fn(sample, summary);
                } catch (const EvaluationDomainError&) {
                    v = kNan;
                }
                values[static_cast<std::size_t>(idx) * k + j] = v;
            }
        }
    };

    if (threads == 1 || m < 2 * threads) {
        worker(0, m);
    } else {
        const long chunk = (m + threads - 1) / threads;
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            const long lo = t * chunk;
            const long hi = std::min(m, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    const double mu0 = scenario.population.mu0;
    EmpiricalStats stats;
    stats.n = scenario.n;
    stats.replications = m;
    stats.seed = scenario.seed;
    stats.estimators.resize(k);

    std::vector<double> kept;
    std::vector<double> scratch;
    kept.reserve(m);
    scratch.reserve(m);
    for (std::size_t j = 0; j < k; ++j) {
        FunctionalStats& out = stats.estimators[j];
        out.name = functionals[j].name;

        kept.clear();
        for (long idx = 0; idx < m; ++idx) {
            double v = values[static_cast<std::size_t>(idx) * k + j];
            if (std::isnan(v)) continue;
            kept.push_back(v);
        }
        out.used = static_cast<long>(kept.size());
        out.domain_errors = m - out.used;
        out.unstable = out.domain_errors * 100 > m;
        if (out.used == 0) {
            out.mean_estimate = out.bias = out.mse = out.se_mse = out.se_bias = kNan;
            out.unstable = true;
            continue;
        }

        out.mean_estimate = pairwise_mean(kept.data(), kept.size());
        out.bias = out.mean_estimate - mu0;

        scratch.resize(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) {
            double dev = kept[i] - mu0;
            scratch[i] = dev * dev;
        }
        out.mse = pairwise_mean(scratch.data(), scratch.size());

        if (out.used > 1) {
            const double denom = static_cast<double>(out.used) *
                                 static_cast<double>(out.used - 1);
            for (std::size_t i = 0; i < kept.size(); ++i) {
                double dev = (kept[i] - mu0) * (kept[i] - mu0) - out.mse;
                scratch[i] = dev * dev;
            }
            out.se_mse = std::sqrt(pairwise_sum(scratch.data(), scratch.size()) / denom);
            for (std::size_t i = 0; i < kept.size(); ++i) {
                double dev = kept[i] - out.mean_estimate;
                scratch[i] = dev * dev;
            }
            out.se_bias = std::sqrt(pairwise_sum(scratch.data(), scratch.size()) / denom);
        } else {
            out.se_mse = out.se_bias = kNan;
        }
    }
    return stats;
}

EmpiricalStats run_monte_carlo(const SimulationScenario& scenario, int threads) {
    std::vector<Functional> fns;
    fns.reserve(scenario.estimators.size());
    const Eigen::VectorXd mu = scenario.population.mu;
    for (const EstimatorConfig& cfg : scenario.estimators) {
        fns.push_back(Functional{
            to_string(cfg.id),
            [cfg, mu](const ObservedSample&, const SampleSummary& summary) {
                return evaluate(cfg, summary, mu);
            }});
    }
    return run_functionals(scenario, fns, threads);
}

ComparisonReport compare_theory(const EmpiricalStats& stats,
                                const std::vector<std::string>& names,
                                const std::vector<TheoryResult>& theory,
                                double z_threshold) {
    if (names.size() != theory.size() || names.size() != stats.estimators.size())
        throw std::invalid_argument("compare_theory: mismatched estimator lists");
    if (!(z_threshold > 0.0))
        throw std::invalid_argument("compare_theory: z threshold must be positive");

    ComparisonReport rep;
    rep.z_threshold = z_threshold;
    rep.pass = true;
    for (std::size_t j = 0; j < names.size(); ++j) {
        const FunctionalStats& e = stats.estimators[j];
        if (e.name != names[j])
            throw std::invalid_argument("compare_theory: estimator order disagrees at " +
                                        names[j]);
        ComparisonRow row;
        row.name = names[j];
        row.empirical_mse = e.mse;
        row.theory_mse = theory[j].mse;
        row.empirical_bias = e.bias;
        row.theory_bias = theory[j].bias;

        auto zscore = [](double emp, double th, double se) {
            if (se > 0.0) return (emp - th) / se;
            return emp == th ? 0.0 : std::numeric_limits<double>::infinity();
        };
        row.z_mse = zscore(e.mse, theory[j].mse, e.se_mse);
        row.z_bias = zscore(e.bias, theory[j].bias, e.se_bias);
        row.mse_pass = std::isfinite(row.z_mse) && std::abs(row.z_mse) <= z_threshold;
        row.bias_pass = std::isfinite(row.z_bias) && std::abs(row.z_bias) <= z_threshold;
        if (!row.mse_pass || !row.bias_pass) rep.pass = false;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace meerr
