#include "ncoadj/sensitivity.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "ncoadj/errors.hpp"
#include "ncoadj/inference.hpp"
#include "ncoadj/ols.hpp"

namespace ncoadj {

double fit_gamma(const TrialDataset& data, const std::string& nco_column) {
  auto ix = data.ncos.index_of(nco_column);
  if (!ix)
    throw validation_error("'" + nco_column + "' is not an NCO column");
  std::vector<double> treat(data.n());
  for (std::size_t i = 0; i < data.n(); ++i)
    treat[i] = static_cast<double>(data.treatment[i]);
  const double* cols[2] = {treat.data(), data.ncos.values[*ix].data()};
  const std::string names[2] = {data.treatment_name, nco_column};
  std::vector<double> coef = fit_pooled(cols, names, data.outcome);
  return coef[2];  // intercept, treatment, NCO
}

SensitivityCurve sensitivity_curve(const TrialDataset& data,
                                   const AdjustmentSpec& spec,
                                   std::span<const double> deltas,
                                   Correction correction, double level) {
  if (spec.nco_columns.size() != 1)
    throw validation_error(
        "the sensitivity curve needs a spec with exactly one NCO column");
  if (deltas.empty())
    throw validation_error("the sensitivity grid is empty");

  // Keep the slope and the adjustment on the same scale: if the spec
  // quantile-transforms the NCO, transform once and work on the result.
  const std::string& nco = spec.nco_columns.front();
  TrialDataset working = data;
  AdjustmentSpec wspec = spec;
  if (spec.quantile_transform_ncos) {
    Transform t;
    t.kind = Transform::Kind::empirical_quantile;
    t.column = nco;
    working = apply_transform(data, t);
    wspec.quantile_transform_ncos = false;
  }

  EstimateResult base = analyze(working, wspec, Estimand::ate, correction,
                                level);
  SensitivityCurve curve;
  curve.gamma_hat = fit_gamma(working, nco);
  curve.base_estimate = base.estimate;
  curve.variance = base.variance;
  curve.correction = correction;
  curve.level = level;
  curve.nco_column = nco;

  // A direct effect delta of treatment on the NCO biases the adjusted
  // estimator by -gamma * delta; shift the point and the interval, keep the
  // variance.
  const double half = base.ci_high - base.estimate;
  curve.points.reserve(deltas.size());
  for (double d : deltas) {
    SensitivityPoint pt;
    pt.delta = d;
    pt.estimate = base.estimate + curve.gamma_hat * d;
    pt.ci_low = pt.estimate - half;
    pt.ci_high = pt.estimate + half;
    curve.points.push_back(pt);
  }
  return curve;
}

void write_csv(const SensitivityCurve& curve, std::ostream& out) {
  out << "delta,estimate,ci_low,ci_high\n";
  char buf[160];
  for (const auto& pt : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g\n", pt.delta,
                  pt.estimate, pt.ci_low, pt.ci_high);
    out << buf;
  }
}

}  // namespace ncoadj
