#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ncoadj/dataset.hpp"

namespace ncoadj {

// Least-squares fit of one arm's outcomes on an intercept plus predictors.
struct WorkingModelFit {
  int arm = 0;
  std::vector<std::string> predictor_names;
  std::vector<double> coefficients;  // intercept first
  std::vector<double> fitted_all;    // evaluated at every unit, length n
  std::vector<double> leverages;     // hat diagonal, own-arm units in order
  std::size_t n_arm = 0;
  std::size_t p = 0;  // predictor count, excluding the intercept

  double max_leverage() const;
};

// Fit arm `arm` (0 or 1) of `data` on the named predictor columns.
// Preconditions: n_arm >= p + 2; design of full column rank (relative
// threshold 1e-10), otherwise numeric_error naming the offending columns.
WorkingModelFit fit_arm(const TrialDataset& data, int arm,
                        std::span<const std::string> predictors);

// Core used by fit_arm and by permutation loops: rows where select[i] == arm,
// response y, predictor columns given as pointers into caller storage.
// `want_leverages` skips the hat diagonal when false (robust-t hot path).
WorkingModelFit fit_subset(std::span<const int> select, int arm,
                           std::span<const double* const> predictor_cols,
                           std::span<const std::string> predictor_names,
                           std::span<const double> y, bool want_leverages);

// Pooled least squares over all rows: y on an intercept plus columns.
// Returns the coefficient vector (intercept first). Used by the
// pseudo-outcome residualization and the sensitivity slope.
std::vector<double> fit_pooled(std::span<const double* const> cols,
                               std::span<const std::string> names,
                               std::span<const double> y);

}  // namespace ncoadj
