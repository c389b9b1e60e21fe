#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "meerr/estimated_optimum.hpp"
#include "meerr/rng.hpp"
#include "meerr/simulate.hpp"
#include "meerr/theory.hpp"
#include "support.hpp"

using namespace meerr;
using namespace meerr::testing;

namespace {

SimulationScenario base_scenario(long n, long reps, std::uint64_t seed) {
    SimulationScenario sc;
    sc.population = scenario_two_aux();
    sc.n = n;
    sc.replications = reps;
    sc.seed = seed;

    EstimatorConfig plain;
    sc.estimators.push_back(plain);
    EstimatorConfig m1;
    m1.id = EstimatorId::M1;
    m1.omega = Eigen::Vector2d(0.5, 0.5);
    sc.estimators.push_back(m1);
    return sc;
}

bool stats_identical(const EmpiricalStats& a, const EmpiricalStats& b) {
    if (a.estimators.size() != b.estimators.size()) return false;
    for (std::size_t i = 0; i < a.estimators.size(); ++i) {
        const FunctionalStats& x = a.estimators[i];
        const FunctionalStats& y = b.estimators[i];
        // Bitwise equality is the contract, not approximate agreement.
        if (x.mean_estimate != y.mean_estimate || x.bias != y.bias || x.mse != y.mse ||
            x.se_mse != y.se_mse || x.se_bias != y.se_bias || x.used != y.used ||
            x.domain_errors != y.domain_errors)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("substream seeding separates replications and streams", "[simulate]") {
    CHECK(substream_seed(1, 0, 0) != substream_seed(1, 0, 1));
    CHECK(substream_seed(1, 0, 0) != substream_seed(1, 1, 0));
    CHECK(substream_seed(1, 0, 0) != substream_seed(2, 0, 0));
    CHECK(substream_seed(7, 41, 3) == substream_seed(7, 41, 3));
}

TEST_CASE("normal sampler is deterministic and roughly standard", "[simulate]") {
    NormalSampler a(12345u);
    NormalSampler b(12345u);
    double sum = 0.0;
    double sum_sq = 0.0;
    const int m = 100000;
    for (int i = 0; i < m; ++i) {
        const double v = a();
        CHECK(v == b());
        sum += v;
        sum_sq += v * v;
    }
    // 4-sigma bands for the first two moments of 1e5 standard normals.
    CHECK(std::abs(sum / m) < 4.0 / std::sqrt(static_cast<double>(m)));
    CHECK(std::abs(sum_sq / m - 1.0) < 4.0 * std::sqrt(2.0 / m));
}

TEST_CASE("pairwise_sum matches extended-precision accumulation", "[simulate]") {
    std::mt19937_64 rng(99001u);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(100001);
    long double exact = 0.0L;
    for (double& x : v) {
        x = dist(rng);
        exact += static_cast<long double>(x);
    }
    const double got = pairwise_sum(v.data(), v.size());
    CHECK(std::abs(got - static_cast<double>(exact)) < 1e-10);
}

TEST_CASE("draw_sample is a pure function of seed and index", "[simulate]") {
    const SimulationScenario sc = base_scenario(50, 200, 4242u);
    const SamplerPlan plan = make_sampler_plan(sc);

    const ObservedSample a = draw_sample(plan, sc.seed, 17);
    const ObservedSample b = draw_sample(plan, sc.seed, 17);
    CHECK(a.y == b.y);
    CHECK(a.x == b.x);

    const ObservedSample c = draw_sample(plan, sc.seed, 18);
    CHECK(a.y != c.y);

    SECTION("summary means agree with direct column means") {
        const SampleSummary s = a.summary();
        CHECK(s.y_bar == Catch::Approx(a.y.mean()).epsilon(1e-14));
        CHECK(s.x_bar(0) == Catch::Approx(a.x.col(0).mean()).epsilon(1e-14));
        CHECK(s.n == 50);
    }
}

TEST_CASE("error stream is independent of the truth stream", "[simulate]") {
    // The same scenario with errors switched off must reproduce the same
    // underlying true values, replication by replication.
    SimulationScenario with_err = base_scenario(40, 200, 777u);
    SimulationScenario no_err = with_err;
    no_err.population = scenario_two_aux_no_error();

    const SamplerPlan plan_err = make_sampler_plan(with_err);
    const SamplerPlan plan_clean = make_sampler_plan(no_err);
    for (long idx : {0L, 1L, 63L}) {
        const ObservedSample a = draw_sample(plan_err, 777u, idx);
        const ObservedSample b = draw_sample(plan_clean, 777u, idx);
        CHECK(a.y_true == b.y_true);
        CHECK(a.x_true == b.x_true);
        CHECK(b.y == b.y_true);  // no error means observed equals true
        CHECK(a.y != a.y_true);
    }
}

TEST_CASE("thread count never changes the results", "[simulate]") {
    const SimulationScenario sc = base_scenario(50, 2000, 90210u);
    const EmpiricalStats one = run_monte_carlo(sc, 1);
    const EmpiricalStats three = run_monte_carlo(sc, 3);
    const EmpiricalStats eight = run_monte_carlo(sc, 8);
    CHECK(stats_identical(one, three));
    CHECK(stats_identical(one, eight));
}

TEST_CASE("plain-mean MSE matches its sampling law", "[simulate]") {
    // V = mu0^2 (c0^2 + c0_err^2) / n holds exactly for the plain mean, so
    // the empirical MSE must sit within the Monte Carlo error band.
    const SimulationScenario sc = base_scenario(100, 20000, 31337u);
    const EmpiricalStats stats = run_monte_carlo(sc, 1);
    const FunctionalStats& plain = stats.estimators[0];

    const double v = variance_plain_mean(sc.population, sc.n);
    CHECK(plain.domain_errors == 0);
    CHECK(std::abs(plain.mse - v) < 4.0 * plain.se_mse);
    CHECK(std::abs(plain.bias) < 4.0 * plain.se_bias);

    SECTION("ratio member agrees with its first-order theory") {
        const MomentMatrices mm = build_moments(sc.population);
        const DerivativeProfile pr =
            derivative_profile(sc.estimators[1], sc.population.mu0, sc.population.mu);
        const TheoryResult tr = theory_result(pr, mm, sc.population, sc.n);
        const FunctionalStats& m1 = stats.estimators[1];
        CHECK(std::abs(m1.mse - tr.mse) < 4.0 * m1.se_mse);
        CHECK(std::abs(m1.bias - tr.bias) < 4.0 * m1.se_bias);
    }
}

TEST_CASE("lognormal sampling reproduces the requested moments", "[simulate]") {
    SimulationScenario sc = base_scenario(100, 10000, 55555u);
    sc.distribution = Distribution::Lognormal;
    const EmpiricalStats stats = run_monte_carlo(sc, 1);
    const FunctionalStats& plain = stats.estimators[0];

    // The plain-mean law only involves the first two moments, which the
    // lognormal route matches by construction.
    const double v = variance_plain_mean(sc.population, sc.n);
    CHECK(std::abs(plain.bias) < 4.0 * plain.se_bias);
    CHECK(std::abs(plain.mse - v) < 4.0 * plain.se_mse);

    SECTION("per-draw moments") {
        const ObservedSample s = draw_sample(make_sampler_plan(sc), sc.seed, 3);
        CHECK(s.y_true.minCoeff() > 0.0);  // lognormal values are positive
    }
}

TEST_CASE("measurement error inflates the MSE under paired seeds", "[simulate]") {
    SimulationScenario noisy = base_scenario(100, 3000, 246810u);
    SimulationScenario clean = noisy;
    clean.population = scenario_two_aux_no_error();

    const EmpiricalStats a = run_monte_carlo(noisy, 1);
    const EmpiricalStats b = run_monte_carlo(clean, 1);
    // Same true draws by stream separation, so the comparison is paired.
    CHECK(a.estimators[0].mse > b.estimators[0].mse);
    CHECK(a.estimators[1].mse > b.estimators[1].mse);
}

TEST_CASE("coefficient-scale MSE stabilises as n grows", "[simulate]") {
    // n * MSE of the plain mean has the same coefficient at every n; check
    // it at two sample sizes, and check that the optimal difference member
    // tracks the family bound.
    const PopulationSpec spec = scenario_two_aux();
    const MomentMatrices mm = build_moments(spec);
    const EstimatorConfig best = optimal_params(EstimatorId::M18, spec, mm);
    const double bound_coeff = 400.0 * min_mse(mm, spec, 400);

    double prev_gap = std::numeric_limits<double>::infinity();
    double prev_se = 0.0;
    for (long n : {100L, 400L}) {
        SimulationScenario sc;
        sc.population = spec;
        sc.n = n;
        sc.replications = 4000;
        sc.seed = 13579u + static_cast<std::uint64_t>(n);
        EstimatorConfig plain;
        sc.estimators.push_back(plain);
        sc.estimators.push_back(best);

        const EmpiricalStats stats = run_monte_carlo(sc, 1);
        const double n_d = static_cast<double>(n);
        CHECK(std::abs(n_d * stats.estimators[0].mse - 40.0) <
              4.0 * n_d * stats.estimators[0].se_mse);

        const double gap = std::abs(n_d * stats.estimators[1].mse - bound_coeff);
        const double se = n_d * stats.estimators[1].se_mse;
        CHECK(gap <= prev_gap + 4.0 * std::sqrt(se * se + prev_se * prev_se));
        prev_gap = gap;
        prev_se = se;
    }
}

TEST_CASE("domain failures are counted and flagged", "[simulate]") {
    SimulationScenario sc = base_scenario(50, 500, 1123u);
    std::vector<Functional> fns;
    // Deterministic failure pattern driven by the replication's own draw.
    fns.push_back(Functional{"fractional_gate",
                             [](const ObservedSample& sample, const SampleSummary&) {
                                 const double v = sample.y(0);
                                 if (std::fmod(std::abs(v), 1.0) < 0.33)
                                     return std::numeric_limits<double>::quiet_NaN();
                                 return v;
                             }});
    const EmpiricalStats stats = run_functionals(sc, fns, 1);
    const FunctionalStats& f = stats.estimators[0];
    CHECK(f.domain_errors > 0);
    CHECK(f.used + f.domain_errors == 500);
    CHECK(f.unstable == (f.domain_errors * 100 > 500));
    CHECK(f.unstable);

    // NaN results and thrown domain errors are treated alike.
    std::vector<Functional> throwing;
    throwing.push_back(Functional{"throwing",
                                  [](const ObservedSample& sample, const SampleSummary&) -> double {
                                      if (std::fmod(std::abs(sample.y(0)), 1.0) < 0.33)
                                          throw EvaluationDomainError(EstimatorId::M1, 1,
                                                                      "forced");
                                      return sample.y(0);
                                  }});
    const EmpiricalStats stats2 = run_functionals(sc, throwing, 1);
    CHECK(stats2.estimators[0].used == f.used);
    CHECK(stats2.estimators[0].mean_estimate == f.mean_estimate);
}

TEST_CASE("scenario validation", "[simulate]") {
    SimulationScenario sc = base_scenario(100, 2000, 1u);
    SECTION("accepts the reference setup") { CHECK(validate_scenario(sc).ok); }
    SECTION("tiny samples are rejected") {
        sc.n = 1;
        CHECK_FALSE(validate_scenario(sc).ok);
    }
    SECTION("too few replications") {
        sc.replications = 50;
        CHECK_FALSE(validate_scenario(sc).ok);
    }
    SECTION("lognormal needs positive means") {
        sc.distribution = Distribution::Lognormal;
        sc.population.mu0 = -20.0;
        const ValidationReport rep = validate_scenario(sc);
        REQUIRE_FALSE(rep.ok);
        CHECK(rep.violations[0].find("lognormal") != std::string::npos);
    }
    SECTION("estimator problems carry their index") {
        sc.estimators[1].omega = Eigen::Vector2d(0.5, 0.4);
        const ValidationReport rep = validate_scenario(sc);
        REQUIRE_FALSE(rep.ok);
        CHECK(rep.violations[0].find("estimators[1]") != std::string::npos);
    }
}

TEST_CASE("compare_theory lines up rows and flags gaps", "[simulate]") {
    EmpiricalStats stats;
    stats.n = 100;
    stats.replications = 1000;
    FunctionalStats a;
    a.name = "PLAIN";
    a.mse = 0.40;
    a.se_mse = 0.01;
    a.bias = 0.001;
    a.se_bias = 0.005;
    stats.estimators.push_back(a);

    TheoryResult tr;
    tr.mse = 0.41;
    tr.bias = 0.0;
    tr.n = 100;

    SECTION("within threshold") {
        const ComparisonReport rep = compare_theory(stats, {"PLAIN"}, {tr}, 4.0);
        REQUIRE(rep.rows.size() == 1);
        CHECK(rep.rows[0].z_mse == Catch::Approx(-1.0).epsilon(1e-12));
        CHECK(rep.rows[0].mse_pass);
        CHECK(rep.rows[0].bias_pass);
        CHECK(rep.pass);
    }
    SECTION("beyond threshold") {
        stats.estimators[0].mse = 0.50;
        const ComparisonReport rep = compare_theory(stats, {"PLAIN"}, {tr}, 4.0);
        CHECK(rep.rows[0].z_mse == Catch::Approx(9.0).epsilon(1e-12));
        CHECK_FALSE(rep.rows[0].mse_pass);
        CHECK_FALSE(rep.pass);
    }
    SECTION("mismatched lists are rejected") {
        CHECK_THROWS_AS(compare_theory(stats, {"PLAIN", "M1"}, {tr, tr}, 4.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(compare_theory(stats, {"M1"}, {tr}, 4.0), std::invalid_argument);
    }
}
