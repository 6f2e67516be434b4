#pragma once

#include <string>
#include <vector>

#include "ncoadj/dataset.hpp"
#include "ncoadj/estimators.hpp"

// Internal: materialize an AdjustmentSpec against a dataset. Quantile-
// transformed NCO columns are owned copies; everything else points into the
// dataset, so the dataset must outlive the resolution.

namespace ncoadj::detail {

struct ResolvedPredictors {
  std::vector<std::vector<double>> owned;
  std::vector<const double*> cols;
  std::vector<std::string> names;
};

ResolvedPredictors resolve_predictors(const TrialDataset& data,
                                      const AdjustmentSpec& spec);

}  // namespace ncoadj::detail
