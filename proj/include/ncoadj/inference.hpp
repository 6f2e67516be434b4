#pragma once

#include <span>
#include <vector>

#include "ncoadj/dataset.hpp"
#include "ncoadj/estimators.hpp"

namespace ncoadj {

// Per-unit influence components R_i of the estimator; the uncorrected
// sandwich variance is sum_i R_i^2. With intercept-only working models this
// reduces exactly to the classical two-sample plug-in form
// sum_a sum_i (Y_i - mean_a)^2 / n_a^2.
std::vector<double> sandwich_r(const TrialDataset& data,
                               const WorkingModelFit& fit0,
                               const WorkingModelFit& fit1, double estimate);

// Finite-sample correction factors C_i. HC0: 1. HC1: the degrees-of-freedom
// rescaling shared by all units. HC2: (1 - H_ii)^{-1/2}. HC3: (1 - H_ii)^{-1}
// with H the own-arm hat diagonal. Throws numeric_error when a leverage is 1
// (HC2/HC3) or an arm has no residual degrees of freedom (HC1).
std::vector<double> correction_factors(Correction c, const TrialDataset& data,
                                       const WorkingModelFit& fit0,
                                       const WorkingModelFit& fit1);

// sum_i (C_i R_i)^2.
double sandwich_variance(std::span<const double> r, std::span<const double> c);

struct WaldInterval {
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

// Normal-theory interval and two-sided p. variance must be >= 0; a zero
// variance yields a degenerate interval and p = 1 iff estimate == 0.
WaldInterval wald(double estimate, double variance, double level = 0.95);

// Conservative difference-in-means variance S1^2/n1 + S0^2/n0 from raw
// per-arm outcome sample variances (ignores any adjustment).
double neyman_variance(const TrialDataset& data);

// Studentized statistic for the weak null: lin_sate estimate divided by
// sqrt(S0^2/n0 + S1^2/n1) with S_a^2 the residual sample variance from arm
// a's working model (divisor n_a - 1, so an empty spec gives the classical
// unpooled t).
double robust_t(const TrialDataset& data, const AdjustmentSpec& spec);

// Permutation hot path: the same statistic over caller-owned storage, so a
// test can rebuild nothing per draw. predictor_cols point into caller data.
double robust_t_core(std::span<const int> treatment, std::span<const double> y,
                     std::span<const double* const> predictor_cols,
                     std::span<const std::string> predictor_names);

}  // namespace ncoadj
