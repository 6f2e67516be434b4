#pragma once

#include <string>
#include <vector>

#include "ncoadj/dataset.hpp"
#include "ncoadj/ols.hpp"

namespace ncoadj {

// Which columns the working models regress on. NCO columns optionally pass
// through the pooled empirical-quantile transform first.
struct AdjustmentSpec {
  std::vector<std::string> covariate_columns;
  std::vector<std::string> nco_columns;
  bool quantile_transform_ncos = false;

  bool empty() const {
    return covariate_columns.empty() && nco_columns.empty();
  }
  // Covariates first, then NCOs.
  std::vector<std::string> predictor_names() const;
};

enum class Estimand { ate, sate };
enum class Correction { hc0, hc1, hc2, hc3, neyman };

// Unadjusted difference in arm means.
double plug_in(const TrialDataset& data);

// Point estimate together with the per-arm working-model fits the variance
// machinery consumes. For an empty spec both fits are intercept-only.
struct ArmFits {
  double estimate = 0.0;
  double pi_hat = 0.0;
  WorkingModelFit fit0;
  WorkingModelFit fit1;
};

// Difference in means minus the augmentation term built from both arms'
// working models, with empirical pi_hat = n1/n. An empty spec returns
// exactly plug_in (the augmentation vanishes analytically; the special case
// keeps it exact in floating point).
ArmFits aipw(const TrialDataset& data, const AdjustmentSpec& spec);

// Arm-mean difference of outcomes residualized at grand-mean-centered
// predictors with per-arm slopes. Numerically identical to aipw; kept as an
// independent formula for cross-checking and for the SATE framing.
ArmFits lin_sate(const TrialDataset& data, const AdjustmentSpec& spec);

struct EstimateResult {
  Estimand estimand = Estimand::ate;
  Correction correction = Correction::hc3;
  AdjustmentSpec adjustment;
  double estimate = 0.0;
  double variance = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  double pi_hat = 0.0;
  double level = 0.95;
  std::size_t n = 0;
  std::size_t n_treated = 0;
};

// Full pipeline: point estimate, corrected sandwich (or Neyman) variance,
// Wald interval and p-value at `level`.
EstimateResult analyze(const TrialDataset& data, const AdjustmentSpec& spec,
                       Estimand estimand, Correction correction,
                       double level = 0.95);

std::string correction_name(Correction c);
std::string estimand_name(Estimand e);

}  // namespace ncoadj
