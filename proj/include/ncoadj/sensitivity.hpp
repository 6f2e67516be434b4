#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ncoadj/dataset.hpp"
#include "ncoadj/estimators.hpp"

namespace ncoadj {

// Outcome-on-NCO slope gamma from the pooled fit of Y on an intercept,
// treatment, and the named NCO. Anchors the sensitivity grid.
double fit_gamma(const TrialDataset& data, const std::string& nco_column);

struct SensitivityPoint {
  double delta = 0.0;  // hypothesized mean NCO effect E[N(1) - N(0)]
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct SensitivityCurve {
  double gamma_hat = 0.0;
  double base_estimate = 0.0;  // NCO-adjusted estimate at delta = 0
  double variance = 0.0;
  Correction correction = Correction::hc3;
  double level = 0.95;
  std::string nco_column;
  std::vector<SensitivityPoint> points;
};

// Bias-corrected estimates over a grid of hypothesized NCO effects: a direct
// effect delta of treatment on the NCO biases the adjusted estimator by
// -gamma * delta, so corrected(delta) = base + gamma_hat * delta with the
// interval shifted and the variance held fixed. The spec must contain
// exactly one NCO column (the curve's anchor).
SensitivityCurve sensitivity_curve(const TrialDataset& data,
                                   const AdjustmentSpec& spec,
                                   std::span<const double> deltas,
                                   Correction correction = Correction::hc3,
                                   double level = 0.95);

// Tidy CSV: delta, estimate, ci_low, ci_high (header included).
void write_csv(const SensitivityCurve& curve, std::ostream& out);

}  // namespace ncoadj
