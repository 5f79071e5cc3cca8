#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "swald/simlab.hpp"

using namespace swald;

namespace {

ScenarioConfig null_scenario(long n) {
  ScenarioConfig cfg;
  cfg.n = n;
  cfg.mu = 40.0;
  cfg.sigma = 15.0;
  cfg.lambda = 0.1;
  cfg.tau = 2.0;
  cfg.gamma = 15.0;
  cfg.trt_hazard = 0.0;
  cfg.trt_score = 0.0;
  return cfg;
}

ScenarioConfig alternative_scenario(long n) {
  ScenarioConfig cfg = null_scenario(n);
  cfg.lambda = 0.07;
  cfg.trt_hazard = -0.018;
  cfg.trt_score = 2.7;
  return cfg;
}

}  // namespace

TEST_CASE("simulated trials have the right terminal fraction") {
  ScenarioConfig cfg = null_scenario(100000);
  cfg.lambda = 0.05;
  const std::vector<TrialRecord> data = simulate_trial(cfg, 2468);
  double terminal = 0.0;
  for (const TrialRecord& z : data) terminal += z.r;
  const double expect = 1.0 - std::exp(-cfg.lambda * cfg.tau);
  CHECK(terminal / double(cfg.n) == Catch::Approx(expect).margin(0.003));
}

TEST_CASE("simulated records respect the composite-score contract") {
  const std::vector<TrialRecord> data = simulate_trial(null_scenario(5000), 13);
  for (const TrialRecord& z : data) {
    if (z.r) {
      CHECK(z.y_tilde == 15.0);
      CHECK(std::isnan(z.y));
    } else {
      CHECK(z.y_tilde == z.y);
    }
  }
}

TEST_CASE("simulate_trial is deterministic in the seed") {
  const ScenarioConfig cfg = alternative_scenario(2000);
  const std::vector<TrialRecord> a = simulate_trial(cfg, 777);
  const std::vector<TrialRecord> b = simulate_trial(cfg, 777);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].a == b[i].a);
    CHECK(a[i].r == b[i].r);
    CHECK(a[i].y_tilde == b[i].y_tilde);
  }
}

TEST_CASE("a protective hazard effect lowers the treated terminal fraction") {
  const std::vector<TrialRecord> data = simulate_trial(alternative_scenario(200000), 31);
  double term[2] = {0, 0}, tot[2] = {0, 0};
  for (const TrialRecord& z : data) {
    tot[z.a] += 1.0;
    term[z.a] += z.r;
  }
  CHECK(term[1] / tot[1] < term[0] / tot[0] - 0.01);
}

TEST_CASE("scenario validation") {
  ScenarioConfig cfg = null_scenario(100);
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(simulate_trial(cfg, 1), ConfigError);
  cfg = null_scenario(100);
  cfg.trt_hazard = -0.2;  // lambda + trt_hazard <= 0
  CHECK_THROWS_AS(simulate_trial(cfg, 1), ConfigError);
}

TEST_CASE("signed Wald critical value solves the defining equation") {
  for (const double rho : {-0.5, 0.0, 0.5})
    for (const double alpha : {0.025, 0.05, 0.5}) {
      const double c = critical_value_two(rho, alpha);
      CHECK(sw_two_p_analytic(c, rho) == Catch::Approx(alpha).margin(1e-6));
    }
  CHECK_THROWS_AS(critical_value_two(1.0, 0.025), DegenerateCorrelationError);
  CHECK_THROWS_AS(critical_value_two(0.0, 0.6), ConfigError);
  CHECK_THROWS_AS(critical_value_two(0.0, 0.0), ConfigError);
}

TEST_CASE("critical value matches a Monte-Carlo quantile") {
  const double rho = 0.0, alpha = 0.025;
  const double c = critical_value_two(rho, alpha);
  Rng rng(424242);
  const long reps = 500000;
  long above = 0;
  for (long r = 0; r < reps; ++r) {
    const double z1 = rng.normal(), z2 = rng.normal();
    const double stat = sw_two_closed_form(std::max(z1, z2), std::min(z1, z2), rho);
    if (stat > c) ++above;
  }
  CHECK(double(above) / double(reps) == Catch::Approx(alpha).margin(0.001));
}

TEST_CASE("stricter dependence lowers the critical value") {
  double prev = 1e9;
  for (const double rho : {-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75}) {
    const double c = critical_value_two(rho, 0.025);
    CHECK(c < prev);
    prev = c;
  }
}

TEST_CASE("min-p critical value and sizing identities") {
  for (const double rho : {-0.5, 0.0, 0.75}) {
    const double q = minp_critical_two(rho, 0.025);
    CHECK(1.0 - bvn_cdf(q, q, rho) == Catch::Approx(0.025).margin(1e-6));
  }
  // independence: P(max < q) = Phi(q)^2
  const double q0 = minp_critical_two(0.0, 0.025);
  CHECK(q0 == Catch::Approx(normal_quantile(std::sqrt(0.975))).margin(1e-6));

  for (const double s : {-1.0, 0.0, 1.0}) {
    const double rho = -0.5;
    const double q = minp_critical_two(rho, 0.025);
    const double m = minp_sizing(rho, s, q, 0.9);
    CHECK(1.0 - bvn_cdf(q - m, q - s * m, rho) == Catch::Approx(0.9).margin(1e-6));
  }
  CHECK_THROWS_AS(minp_sizing(0.0, 0.5, 2.0, 1.0), ConfigError);
}

TEST_CASE("study 1 compares the tests on sized alternatives") {
  Study1Config cfg;
  cfg.rho_grid = {-0.5, 0.75};
  cfg.s_grid = {-1.0, 1.0};
  cfg.replications = 4000;
  cfg.seed = 91;
  const StudyResultTable table = run_study1(cfg);
  REQUIRE(table.rows.size() == 4);
  REQUIRE(table.columns.size() == 10);

  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(table.value(r, "minp_power") == Catch::Approx(0.9).margin(0.016));
    CHECK(table.value(r, "sw_critical") > 0.0);
    CHECK(table.value(r, "replications") == 4000.0);
  }
  // equal effects at rho = -0.5: the cone test clearly dominates
  CHECK(table.value(1, "rho") == -0.5);
  CHECK(table.value(1, "s") == 1.0);
  CHECK(table.value(1, "sw_power") - table.value(1, "minp_power") > 0.04);
  // opposite effects at rho = 0.75: both tests sit at the sizing target
  CHECK(table.value(2, "rho") == 0.75);
  CHECK(table.value(2, "s") == -1.0);
  CHECK(std::fabs(table.value(2, "sw_power") - table.value(2, "minp_power")) < 0.02);
}

TEST_CASE("study 1 is reproducible and thread-count independent") {
  Study1Config cfg;
  cfg.rho_grid = {0.25};
  cfg.s_grid = {0.0, 0.5};
  cfg.replications = 1000;
  cfg.seed = 5;
  CHECK(run_study1(cfg, 1).csv() == run_study1(cfg, 3).csv());
  CHECK(run_study1(cfg).csv() == run_study1(cfg).csv());

  cfg.replications = 50;
  CHECK_THROWS_AS(run_study1(cfg), ConfigError);
}

TEST_CASE("study 2 estimates the size of each intersection test") {
  const std::vector<ScenarioConfig> scenarios = {null_scenario(150)};
  const std::vector<Eigen::VectorXd> weights = {Eigen::VectorXd::Constant(3, 1.0 / 3.0)};
  const StudyResultTable table = run_study2(scenarios, weights, 40, 1000, 0.025, 606);
  REQUIRE(table.rows.size() == 4);
  CHECK(table.cell(0, "subset") == "1,2,3");
  CHECK(table.cell(1, "subset") == "1,2");
  CHECK(table.cell(2, "subset") == "1,3");
  CHECK(table.cell(3, "subset") == "2,3");
  for (std::size_t r = 0; r < 4; ++r) {
    const double t1 = table.value(r, "type1");
    CHECK(t1 >= 0.0);
    CHECK(t1 <= 0.31);  // far from alpha only if something is badly wrong
    CHECK(table.cell(r, "weights") == "0.3333|0.3333|0.3333");
  }
}

TEST_CASE("study 2 nulls out treatment effects before simulating") {
  const std::vector<Eigen::VectorXd> weights = {Eigen::VectorXd::Constant(3, 1.0 / 3.0)};
  ScenarioConfig with_effects = null_scenario(150);
  with_effects.trt_hazard = -0.05;
  with_effects.trt_score = 3.0;
  const StudyResultTable a = run_study2({null_scenario(150)}, weights, 20, 1000, 0.025, 9);
  const StudyResultTable b = run_study2({with_effects}, weights, 20, 1000, 0.025, 9);
  CHECK(a.csv() == b.csv());
}

TEST_CASE("study 2 input guards and determinism") {
  const std::vector<Eigen::VectorXd> weights = {Eigen::VectorXd::Constant(3, 1.0 / 3.0)};
  CHECK_THROWS_AS(run_study2({}, weights, 10, 1000, 0.025, 1), EmptyExperimentError);
  CHECK_THROWS_AS(run_study2({null_scenario(100)}, weights, 0, 1000, 0.025, 1),
                  EmptyExperimentError);
  CHECK_THROWS_AS(run_study2({null_scenario(100)}, {}, 10, 1000, 0.025, 1),
                  EmptyExperimentError);
  CHECK_THROWS_AS(run_study2({null_scenario(100)}, {Eigen::VectorXd::Constant(2, 0.5)}, 10,
                             1000, 0.025, 1),
                  ConfigError);

  const StudyResultTable one = run_study2({null_scenario(120)}, weights, 15, 1000, 0.025, 77, 1);
  const StudyResultTable two = run_study2({null_scenario(120)}, weights, 15, 1000, 0.025, 77, 2);
  CHECK(one.csv() == two.csv());
}

TEST_CASE("study 3 closed-testing power is subset monotone") {
  const StudyResultTable table =
      run_study3(alternative_scenario(150), {150}, {Strategy::sw_equal, Strategy::minp}, 30,
                 1000, 0.025, 112);
  REQUIRE(table.rows.size() == 2 * 7);

  auto power = [&](const std::string& strategy, const std::string& subset) {
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      if (table.cell(r, "strategy") == strategy && table.cell(r, "subset") == subset)
        return table.value(r, "power");
    throw ConfigError("row not found");
  };
  for (const std::string strategy : {"sw_equal", "minp"}) {
    CHECK(power(strategy, "1,2") <= power(strategy, "1") + 1e-12);
    CHECK(power(strategy, "1,2") <= power(strategy, "2") + 1e-12);
    CHECK(power(strategy, "1,2,3") <= power(strategy, "1,2") + 1e-12);
    CHECK(power(strategy, "1,2,3") <= power(strategy, "1,3") + 1e-12);
    CHECK(power(strategy, "1,2,3") <= power(strategy, "2,3") + 1e-12);
  }
}

TEST_CASE("study 3 guards and determinism") {
  CHECK_THROWS_AS(run_study3(alternative_scenario(100), {}, {Strategy::minp}, 10, 1000,
                             0.025, 1),
                  EmptyExperimentError);
  CHECK_THROWS_AS(run_study3(alternative_scenario(100), {100}, {}, 10, 1000, 0.025, 1),
                  EmptyExperimentError);
  CHECK_THROWS_AS(run_study3(alternative_scenario(100), {100}, {Strategy::minp}, 0, 1000,
                             0.025, 1),
                  EmptyExperimentError);

  const StudyResultTable one = run_study3(alternative_scenario(120), {120},
                                          {Strategy::sw_weighted}, 12, 1000, 0.025, 3, 1);
  const StudyResultTable two = run_study3(alternative_scenario(120), {120},
                                          {Strategy::sw_weighted}, 12, 1000, 0.025, 3, 2);
  CHECK(one.csv() == two.csv());
}

TEST_CASE("bahadur grid table") {
  const StudyResultTable table = bahadur_grid({0.0, 0.5}, {-1.0, 0.0, 0.5, 1.0});
  REQUIRE(table.rows.size() == 8);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    CHECK(table.value(r, "ratio") <= table.value(r, "ratio_cap") + 1e-12);
    CHECK(table.value(r, "ratio") >= 1.0 - 1e-12);
    if (table.value(r, "s") <= table.value(r, "rho"))
      CHECK(table.value(r, "ratio") == 1.0);
  }
  // independence diagonal: full cap
  CHECK(table.value(3, "rho") == 0.0);
  CHECK(table.value(3, "s") == 1.0);
  CHECK(table.value(3, "ratio") == 2.0);

  const StudyResultTable csv_probe = bahadur_grid({0.25}, {0.5});
  CHECK(csv_probe.csv().rfind("rho,s,z_max,z_min,slope_sw,slope_minp,ratio,ratio_cap\n", 0) == 0);
}
