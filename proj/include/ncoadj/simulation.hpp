#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ncoadj/dataset.hpp"
#include "ncoadj/estimators.hpp"

namespace ncoadj {

enum class Link { identity, logistic8 };

// One simulated-trial configuration. X is an observed covariate, U an
// unobserved cause shared by outcome and NCO; beta1/beta2 are derived from
// the target correlations.
struct ScenarioParams {
  std::size_t n = 40;
  double pi = 0.8;     // assignment probability
  double beta = 1.0;   // treatment effect on the outcome
  double beta_n = 0.0; // direct treatment effect on the NCO (identity link
                       // only; a nonzero value violates the NCO assumption)
  double rho_yx = 0.3;          // corr(Y(0), X)
  double rho_yn_given_x = 0.0;  // partial corr(Y(0), N(0) | X)
  double rho_xu = 0.0;          // corr(X, U)
  Link link = Link::identity;
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;

  void validate() const;  // throws validation_error
};

struct Coefficients {
  double beta1 = 0.0;  // X weight
  double beta2 = 0.0;  // U weight
};

// Invert the correlation targets: beta2 = sqrt(r/(1-r)) with
// r = rho_yn_given_x, then beta1 = sqrt(rho_yx^2 (beta2^2+1)/(1-rho_yx^2)).
Coefficients derive_coefficients(double rho_yx, double rho_yn_given_x);

// Draw one trial. Fully determined by (params.seed, replicate_index); the
// assignment vector is redrawn whole until both arms are nonempty, and
// *redraws (if given) accumulates the number of extra draws.
TrialDataset generate_trial(const ScenarioParams& params,
                            std::uint64_t replicate_index,
                            std::uint64_t* redraws = nullptr);

// The estimator suite the simulation experiments compare.
enum class EstimatorKind { plug_in, covariate, nco, quantile_nco, full };

AdjustmentSpec adjustment_for(EstimatorKind kind);
std::string estimator_name(EstimatorKind kind);
std::string link_name(Link link);

// Operating characteristics of one estimator x correction cell.
struct CellSummary {
  EstimatorKind estimator = EstimatorKind::plug_in;
  Correction correction = Correction::hc0;
  double mean_estimate = 0.0;
  double relative_abs_bias = 0.0;  // mean |est - beta| / same for plug-in
  double coverage = 0.0;           // CI covers beta
  double median_relative_efficiency = 0.0;  // median of var / plug-in var
  double rejection_rate = 0.0;  // Wald p <= 0.05; power, or type I when
                                // beta == 0
  std::size_t used_replicates = 0;
  std::size_t failures = 0;
};

struct ScenarioSummary {
  ScenarioParams params;
  std::vector<CellSummary> cells;
  std::uint64_t assignment_redraws = 0;
  std::vector<std::string> warnings;
};

// Run every replicate, apply the estimator suite under each correction, and
// aggregate. Replicates are distributed over `threads` (0 = hardware count)
// but aggregated in replicate order, so results are identical for any thread
// count. A replicate where an estimator fails is dropped from that
// estimator's cells (and counted); an estimator failing on more than 1% of
// replicates aborts the scenario with numeric_error.
ScenarioSummary run_scenario(const ScenarioParams& params,
                             std::span<const EstimatorKind> estimators,
                             std::span<const Correction> corrections,
                             std::size_t threads = 1);

struct GridConfig {
  std::vector<ScenarioParams> scenarios;
  std::vector<EstimatorKind> estimators;
  std::vector<Correction> corrections;
  std::size_t threads = 0;
};

// Parse a JSON config: scalar or array values per scenario axis expand to
// the cartesian product; "estimators", "corrections", "replicates", "seed",
// "threads" at the top level.
GridConfig parse_grid_config(const std::string& json_text);

// Tidy CSV: one row per scenario x estimator x correction x metric.
void write_results_csv(std::span<const ScenarioSummary> results,
                       std::ostream& out);

}  // namespace ncoadj
