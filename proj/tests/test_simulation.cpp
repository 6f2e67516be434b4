#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ncoadj/errors.hpp"
#include "ncoadj/simulation.hpp"

using namespace ncoadj;

namespace {

double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("derive_coefficients frozen values") {
  Coefficients c = derive_coefficients(0.3, 0.5);
  CHECK(c.beta2 == 1.0);
  CHECK(c.beta1 == doctest::Approx(0.4447495899966607).epsilon(1e-15));

  Coefficients d = derive_coefficients(0.3, 0.8);
  CHECK(d.beta2 == 2.0);
  CHECK(d.beta1 == doctest::Approx(0.7032108464077431).epsilon(1e-15));

  Coefficients zero = derive_coefficients(0.0, 0.0);
  CHECK(zero.beta1 == 0.0);
  CHECK(zero.beta2 == 0.0);

  CHECK_THROWS_AS(derive_coefficients(1.0, 0.0), validation_error);
  CHECK_THROWS_AS(derive_coefficients(0.3, -0.1), validation_error);
}

TEST_CASE("generate_trial is a pure function of seed and index") {
  ScenarioParams p;
  p.n = 30;
  p.pi = 0.5;
  p.beta = 1.0;
  p.rho_yx = 0.3;
  p.rho_yn_given_x = 0.5;
  p.seed = 12345;

  TrialDataset a = generate_trial(p, 5);
  TrialDataset b = generate_trial(p, 5);
  CHECK(a.treatment == b.treatment);
  CHECK(a.outcome == b.outcome);
  CHECK(a.covariates.values[0] == b.covariates.values[0]);
  CHECK(a.ncos.values[0] == b.ncos.values[0]);

  TrialDataset c = generate_trial(p, 6);
  CHECK(a.outcome != c.outcome);

  CHECK(a.n() == 30);
  CHECK(a.covariates.names == std::vector<std::string>{"X"});
  CHECK(a.ncos.names == std::vector<std::string>{"N"});
  CHECK(a.design_pi == 0.5);
  CHECK(a.n_treated() > 0);
  CHECK(a.n_treated() < a.n());
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("direct NCO effect adds beta_n to treated units only") {
  ScenarioParams base;
  base.n = 24;
  base.seed = 777;
  base.beta_n = 0.0;
  ScenarioParams dosed = base;
  dosed.beta_n = 3.0;

  TrialDataset d0 = generate_trial(base, 2);
  TrialDataset d1 = generate_trial(dosed, 2);
  CHECK(d0.treatment == d1.treatment);  // same stream, same draws
  CHECK(d0.outcome == d1.outcome);
  for (std::size_t i = 0; i < d0.n(); ++i) {
    double shift = d1.ncos.values[0][i] - d0.ncos.values[0][i];
    if (d0.treatment[i])
      CHECK(shift == doctest::Approx(3.0).epsilon(1e-12));
    else
      CHECK(shift == 0.0);
  }
}

TEST_CASE("logistic8 link bounds the NCO and rejects beta_n") {
  ScenarioParams p;
  p.n = 200;
  p.link = Link::logistic8;
  p.rho_yn_given_x = 0.5;
  p.seed = 31;
  TrialDataset d = generate_trial(p, 0);
  for (double v : d.ncos.values[0]) {
    CHECK(v > 0.0);
    CHECK(v < 8.0);
  }

  ScenarioParams bad = p;
  bad.beta_n = 1.0;
  CHECK_THROWS_AS(generate_trial(bad, 0), validation_error);
  CHECK_THROWS_AS(bad.validate(), validation_error);
}

TEST_CASE("assignment redraw loop keeps both arms filled") {
  ScenarioParams p;
  p.n = 4;
  p.pi = 0.8;  // all-treated draws are common at n=4
  p.seed = 99;
  bool saw_redraw = false;
  for (std::uint64_t r = 0; r < 200; ++r) {
    std::uint64_t redraws = 0;
    TrialDataset d = generate_trial(p, r, &redraws);
    CHECK(d.n_treated() > 0);
    CHECK(d.n_treated() < 4);
    saw_redraw = saw_redraw || redraws > 0;
  }
  CHECK(saw_redraw);
}

TEST_CASE("generated correlations land on their targets") {
  ScenarioParams p;
  p.n = 150000;
  p.pi = 0.5;
  p.beta = 0.0;
  p.rho_yx = 0.3;
  p.rho_yn_given_x = 0.5;
  p.seed = 2024;
  TrialDataset d = generate_trial(p, 0);
  const auto& x = d.covariates.values[0];
  const auto& nn = d.ncos.values[0];
  const auto& y = d.outcome;

  double r_yx = corr(y, x);
  CHECK(r_yx == doctest::Approx(0.3).epsilon(0.05));
  double r_yn = corr(y, nn);
  double r_nx = corr(nn, x);
  double partial = (r_yn - r_yx * r_nx) /
                   std::sqrt((1.0 - r_yx * r_yx) * (1.0 - r_nx * r_nx));
  CHECK(partial == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("run_scenario is invariant to the thread count") {
  ScenarioParams p;
  p.n = 40;
  p.pi = 0.5;
  p.beta = 1.0;
  p.rho_yx = 0.3;
  p.rho_yn_given_x = 0.5;
  p.replicates = 60;
  p.seed = 4321;
  const EstimatorKind est[] = {EstimatorKind::plug_in, EstimatorKind::covariate,
                               EstimatorKind::nco};
  const Correction corr_list[] = {Correction::hc0, Correction::hc3};

  ScenarioSummary s1 = run_scenario(p, est, corr_list, 1);
  ScenarioSummary s3 = run_scenario(p, est, corr_list, 3);
  REQUIRE(s1.cells.size() == 6);
  REQUIRE(s3.cells.size() == 6);
  CHECK(s1.assignment_redraws == s3.assignment_redraws);
  for (std::size_t i = 0; i < s1.cells.size(); ++i) {
    const CellSummary& a = s1.cells[i];
    const CellSummary& b = s3.cells[i];
    CHECK(a.estimator == b.estimator);
    CHECK(a.correction == b.correction);
    CHECK(a.mean_estimate == b.mean_estimate);  // bitwise
    CHECK(a.relative_abs_bias == b.relative_abs_bias);
    CHECK(a.coverage == b.coverage);
    CHECK(a.median_relative_efficiency == b.median_relative_efficiency);
    CHECK(a.rejection_rate == b.rejection_rate);
    CHECK(a.used_replicates == b.used_replicates);
    CHECK(a.failures == b.failures);
  }

  // The plug-in row is its own reference.
  CHECK(s1.cells[0].estimator == EstimatorKind::plug_in);
  CHECK(s1.cells[0].relative_abs_bias == 1.0);
  CHECK(s1.cells[0].median_relative_efficiency == 1.0);
  CHECK(s1.cells[0].used_replicates == 60);
  for (const CellSummary& c : s1.cells) {
    CHECK(c.coverage >= 0.0);
    CHECK(c.coverage <= 1.0);
    CHECK(c.rejection_rate >= 0.0);
    CHECK(c.rejection_rate <= 1.0);
  }
}

TEST_CASE("run_scenario aborts when an estimator keeps failing") {
  ScenarioParams p;
  p.n = 6;
  p.pi = 0.5;
  p.replicates = 50;
  p.seed = 5;
  // full adjustment needs 4 units per arm; n=6 cannot provide that
  const EstimatorKind est[] = {EstimatorKind::full};
  const Correction corr_list[] = {Correction::hc0};
  CHECK_THROWS_AS(run_scenario(p, est, corr_list, 1), numeric_error);

  const EstimatorKind none[] = {};
  CHECK_THROWS_AS(run_scenario(p, std::span<const EstimatorKind>(none, 0),
                               corr_list, 1),
                  validation_error);
}

TEST_CASE("grid config expansion") {
  std::string text = R"({
    "seed": 7,
    "replicates": 50,
    "threads": 2,
    "n": [10, 20],
    "link": ["identity", "logistic8"],
    "beta": 0.0,
    "rho_yn_given_x": 0.5,
    "estimators": ["plug_in", "nco"],
    "corrections": ["hc0"]
  })";
  GridConfig g = parse_grid_config(text);
  REQUIRE(g.scenarios.size() == 4);
  CHECK(g.estimators.size() == 2);
  CHECK(g.corrections.size() == 1);
  CHECK(g.threads == 2);
  // n-major, link-minor nesting
  CHECK(g.scenarios[0].n == 10);
  CHECK(g.scenarios[0].link == Link::identity);
  CHECK(g.scenarios[1].n == 10);
  CHECK(g.scenarios[1].link == Link::logistic8);
  CHECK(g.scenarios[2].n == 20);
  for (const auto& s : g.scenarios) {
    CHECK(s.replicates == 50);
    CHECK(s.beta == 0.0);
    CHECK(s.rho_yn_given_x == 0.5);
  }
  // per-scenario seeds all distinct
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      CHECK(g.scenarios[i].seed != g.scenarios[j].seed);

  // defaults: full estimator suite, four HC corrections
  GridConfig d = parse_grid_config(R"({"n": 12})");
  CHECK(d.estimators.size() == 5);
  CHECK(d.corrections.size() == 4);
  CHECK(d.scenarios.size() == 1);
  CHECK(d.scenarios[0].pi == 0.8);

  CHECK_THROWS_AS(parse_grid_config("not json"), validation_error);
  CHECK_THROWS_AS(parse_grid_config(R"([1,2])"), validation_error);
  CHECK_THROWS_AS(parse_grid_config(R"({"link": "probit"})"),
                  validation_error);
  CHECK_THROWS_AS(parse_grid_config(R"({"estimators": ["ipw"]})"),
                  validation_error);
  CHECK_THROWS_AS(parse_grid_config(R"({"n": []})"), validation_error);
  // beta_n with a logistic link violates the scenario contract
  CHECK_THROWS_AS(
      parse_grid_config(R"({"beta_n": 1.0, "link": "logistic8"})"),
      validation_error);
}

TEST_CASE("results CSV is tidy and names the null metric") {
  ScenarioParams p;
  p.n = 12;
  p.pi = 0.5;
  p.beta = 0.0;
  p.replicates = 30;
  p.seed = 11;
  const EstimatorKind est[] = {EstimatorKind::plug_in};
  const Correction corr_list[] = {Correction::hc0, Correction::hc1};
  ScenarioSummary s = run_scenario(p, est, corr_list, 1);

  std::ostringstream out;
  write_results_csv({&s, 1}, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "n,pi,beta,beta_n,rho_yx,rho_yn_given_x,rho_xu,link,replicates,seed,"
        "estimator,correction,metric,value");
  std::size_t rows = 0;
  bool saw_type1 = false, saw_power = false;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 13);
    if (line.find(",type1,") != std::string::npos) saw_type1 = true;
    if (line.find(",power,") != std::string::npos) saw_power = true;
    ++rows;
  }
  CHECK(rows == 2 * 7);  // 2 cells x 7 metrics
  CHECK(saw_type1);
  CHECK_FALSE(saw_power);
}
