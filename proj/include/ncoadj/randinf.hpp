#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ncoadj/dataset.hpp"
#include "ncoadj/estimators.hpp"

namespace ncoadj {

// How to enumerate treatment assignments with the observed treated count.
struct PermutationPlan {
  enum class Mode { automatic, exhaustive, monte_carlo };
  Mode mode = Mode::automatic;  // exhaustive iff C(n, n1) <= exhaustive_cap
  std::uint64_t draws = 1000;   // Monte Carlo B, >= 100
  std::uint64_t seed = 0;
  std::uint64_t exhaustive_cap = 200000;
};

enum class StatKind { diff_means, robust_t };

struct TestStatistic {
  StatKind kind = StatKind::diff_means;
  AdjustmentSpec adjustment;  // robust_t only
};

struct RandTestResult {
  double p = 1.0;
  double t_obs = 0.0;
  bool exhaustive = false;
  std::uint64_t evaluated = 0;  // assignments evaluated (identity included
                                // when exhaustive)
  std::uint64_t extreme = 0;    // assignments at least as extreme as observed
  std::uint64_t failures = 0;   // statistic failures, counted as extreme
};

// Exact test of the sharp null of no individual effect on the named column
// (an NCO, a covariate, or the primary outcome). Exhaustive p is the exact
// proportion of assignments with |T| >= |T_obs| (identity assignment
// included); Monte Carlo p is (1 + extreme) / (1 + B). A statistic that
// cannot be evaluated under some assignment counts as infinitely extreme.
RandTestResult sharp_null_test(const TrialDataset& data,
                               const std::string& outcome_column,
                               const TestStatistic& stat,
                               const PermutationPlan& plan);

// Residualize the primary outcome on the spec's predictors (pooled fit, no
// treatment term), then run the sharp test on the residuals.
RandTestResult pseudo_outcome_test(const TrialDataset& data,
                                   const AdjustmentSpec& residualize_on,
                                   StatKind residual_statistic,
                                   const PermutationPlan& plan);

// Permutation distribution of the adjusted robust t itself: approximately
// valid for the weak null, exact under the sharp null.
RandTestResult model_output_test(const TrialDataset& data,
                                 const AdjustmentSpec& spec,
                                 const PermutationPlan& plan);

enum class EpsilonRule { explicit_value, fraction_of_sd, fraction_of_range };

struct EquivalenceConfig {
  EpsilonRule rule = EpsilonRule::explicit_value;
  double epsilon = 0.0;   // explicit_value: the margin itself, > 0
  double fraction = 0.0;  // sd/range rules: margin = fraction * pooled
                          // SD/range of the primary outcome
  StatKind statistic = StatKind::diff_means;
  AdjustmentSpec adjustment;  // robust_t statistic only; must not contain
                              // the tested NCO
  PermutationPlan plan;
  double alpha = 0.05;
};

struct EquivalenceResult {
  double epsilon = 0.0;
  double p_lower = 1.0;  // boundary tau = -epsilon, upper-tail
  double p_upper = 1.0;  // boundary tau = +epsilon, lower-tail
  double t_obs = 0.0;
  bool reject = false;  // both one-sided p <= alpha: effects inside the margin
};

// Two one-sided randomization tests against the bounded nulls tau <= -eps
// and tau >= +eps, each built by imputing the boundary sharp model for the
// named NCO. Rejecting both concludes every individual NCO effect lies in
// [-eps, +eps].
EquivalenceResult equivalence_pretest(const TrialDataset& data,
                                      const std::string& nco_column,
                                      const EquivalenceConfig& config);

struct PretestConfig {
  enum class Kind { sharp, equivalence };
  Kind kind = Kind::sharp;
  TestStatistic statistic;  // sharp pretest statistic
  PermutationPlan plan;
  double alpha = 0.05;
  // equivalence gate only:
  EpsilonRule epsilon_rule = EpsilonRule::explicit_value;
  double epsilon = 0.0;
  double fraction = 0.0;
};

struct GateReport {
  PretestConfig::Kind kind = PretestConfig::Kind::sharp;
  bool adjusted = false;  // branch taken
  struct PerNco {
    std::string column;
    double p = 1.0;        // sharp gate: two-sided sharp p
    double p_lower = 1.0;  // equivalence gate components
    double p_upper = 1.0;
    double epsilon = 0.0;
    bool reject = false;
  };
  std::vector<PerNco> tests;
};

struct GatedEstimate {
  EstimateResult result;
  GateReport gate;
};

// Run the configured pretest on every NCO in the spec and decide the branch.
// Sharp gate: adjustment survives only if no NCO test rejects its null.
// Equivalence gate: adjustment survives only if every NCO test concludes
// equivalence.
GateReport nco_pretests(const TrialDataset& data, const AdjustmentSpec& spec,
                        const PretestConfig& config);

// Pretest each NCO in the spec, then estimate along the selected branch.
// Sharp gate: any rejection discards adjustment entirely (plug-in branch);
// otherwise the full spec is used. Equivalence gate: adjustment is used only
// when every NCO test concludes equivalence.
GatedEstimate pretest_gated_estimate(const TrialDataset& data,
                                     const AdjustmentSpec& spec,
                                     const PretestConfig& config,
                                     Estimand estimand, Correction correction,
                                     double level = 0.95);

}  // namespace ncoadj
