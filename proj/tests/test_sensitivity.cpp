#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ncoadj/errors.hpp"
#include "ncoadj/rng.hpp"
#include "ncoadj/sensitivity.hpp"
#include "oracles.hpp"

using namespace ncoadj;

namespace {

TrialDataset nco_trial(std::uint64_t seed, std::size_t n = 40) {
  rng::Stream s(seed);
  TrialDataset d;
  std::vector<double> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.treatment.push_back(i % 2 == 0 ? 1 : 0);
    double u = s.normal();
    nn[i] = u + 0.4 * s.normal();
    d.outcome.push_back(1.0 + 0.9 * u + 0.5 * s.normal() +
                        1.5 * d.treatment.back());
  }
  d.ncos.add("N", nn);
  return d;
}

}  // namespace

TEST_CASE("fit_gamma matches the pooled OLS oracle") {
  TrialDataset d = nco_trial(808);
  std::vector<double> a(d.n());
  for (std::size_t i = 0; i < d.n(); ++i)
    a[i] = static_cast<double>(d.treatment[i]);
  std::vector<double> ref = oracle::ols({a, d.ncos.values[0]}, d.outcome);
  CHECK(fit_gamma(d, "N") == doctest::Approx(ref[2]).epsilon(1e-10));
  CHECK_THROWS_AS(fit_gamma(d, "Q"), validation_error);
}

TEST_CASE("sensitivity curve is affine with the fitted slope") {
  TrialDataset d = nco_trial(909);
  AdjustmentSpec spec{{}, {"N"}, false};
  std::vector<double> deltas{-2.0, -0.5, 0.0, 0.25, 1.0, 3.0};
  SensitivityCurve curve = sensitivity_curve(d, spec, deltas);

  EstimateResult base = analyze(d, spec, Estimand::ate, Correction::hc3);
  CHECK(curve.base_estimate == base.estimate);
  CHECK(curve.variance == base.variance);
  CHECK(curve.gamma_hat == doctest::Approx(fit_gamma(d, "N")).epsilon(1e-14));
  REQUIRE(curve.points.size() == deltas.size());

  double width = base.ci_high - base.ci_low;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const SensitivityPoint& pt = curve.points[i];
    CHECK(pt.delta == deltas[i]);
    CHECK(pt.estimate ==
          doctest::Approx(base.estimate + curve.gamma_hat * deltas[i])
              .epsilon(1e-13));
    CHECK(pt.ci_high - pt.ci_low == doctest::Approx(width).epsilon(1e-12));
    CHECK((pt.ci_low + pt.ci_high) / 2.0 ==
          doctest::Approx(pt.estimate).epsilon(1e-12));
  }

  // delta = 0 reproduces the base analysis
  const SensitivityPoint& at_zero = curve.points[2];
  CHECK(at_zero.estimate == base.estimate);
  CHECK(at_zero.ci_low == doctest::Approx(base.ci_low).epsilon(1e-13));
  CHECK(at_zero.ci_high == doctest::Approx(base.ci_high).epsilon(1e-13));
}

TEST_CASE("orthogonal NCO gives a flat curve") {
  TrialDataset d;
  d.treatment = {1, 1, 1, 0, 0, 0};
  d.outcome = {3.0, 3.0, 3.0, 1.0, 1.0, 1.0};
  d.ncos.add("N", {1.0, -1.0, 0.0, 2.0, -1.0, -1.0});  // orthogonal to 1, A, Y
  std::vector<double> deltas{-1.0, 0.0, 2.0};
  SensitivityCurve curve =
      sensitivity_curve(d, AdjustmentSpec{{}, {"N"}, false}, deltas,
                        Correction::hc0);
  CHECK(std::fabs(curve.gamma_hat) < 1e-13);
  for (const auto& pt : curve.points)
    CHECK(pt.estimate == doctest::Approx(curve.base_estimate).epsilon(1e-12));
}

TEST_CASE("quantile spec transforms once and stays coherent") {
  TrialDataset d = nco_trial(1010);
  AdjustmentSpec qspec{{}, {"N"}, true};
  std::vector<double> deltas{-0.2, 0.0, 0.2};
  SensitivityCurve via_spec = sensitivity_curve(d, qspec, deltas);

  Transform t{Transform::Kind::empirical_quantile, "N", 0.0};
  TrialDataset pre = apply_transform(d, t);
  SensitivityCurve direct =
      sensitivity_curve(pre, AdjustmentSpec{{}, {"N"}, false}, deltas);
  CHECK(via_spec.gamma_hat == direct.gamma_hat);
  CHECK(via_spec.base_estimate == direct.base_estimate);
  for (std::size_t i = 0; i < deltas.size(); ++i)
    CHECK(via_spec.points[i].estimate == direct.points[i].estimate);
}

TEST_CASE("sensitivity validation") {
  TrialDataset d = nco_trial(111);
  std::vector<double> deltas{0.0};
  CHECK_THROWS_AS(
      sensitivity_curve(d, AdjustmentSpec{}, deltas),
      validation_error);
  TrialDataset two = d;
  two.ncos.add("N2", d.ncos.values[0]);
  CHECK_THROWS_AS(
      sensitivity_curve(two, AdjustmentSpec{{}, {"N", "N2"}, false}, deltas),
      validation_error);
  std::vector<double> empty;
  CHECK_THROWS_AS(
      sensitivity_curve(d, AdjustmentSpec{{}, {"N"}, false}, empty),
      validation_error);
}

TEST_CASE("sensitivity CSV shape") {
  TrialDataset d = nco_trial(222);
  std::vector<double> deltas{-1.0, 0.0, 1.0};
  SensitivityCurve curve =
      sensitivity_curve(d, AdjustmentSpec{{}, {"N"}, false}, deltas);
  std::ostringstream out;
  write_csv(curve, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "delta,estimate,ci_low,ci_high");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
    ++rows;
  }
  CHECK(rows == 3);
}
