#include "ncoadj/randinf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncoadj/errors.hpp"
#include "ncoadj/inference.hpp"
#include "ncoadj/kernels.hpp"
#include "ncoadj/ols.hpp"
#include "ncoadj/rng.hpp"
#include "src/resolve.hpp"

namespace ncoadj {

namespace {

constexpr std::uint64_t kTagPermutation = 0x7065726d;  // stream namespace

enum class Tail { two_sided, lower, upper };

// C(n, k) clamped to cap + 1 (exact while it fits).
std::uint64_t choose_capped(std::uint64_t n, std::uint64_t k,
                            std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(c);
}

bool is_extreme(Tail tail, double t, double t_obs) {
  switch (tail) {
    case Tail::two_sided: return std::abs(t) >= std::abs(t_obs);
    case Tail::lower: return t <= t_obs;
    case Tail::upper: return t >= t_obs;
  }
  return false;
}

// Enumerate (or sample) treatment assignments with the observed treated
// count and tally how often the statistic is at least as extreme as
// observed. A statistic that throws under some assignment counts as
// infinitely extreme.
template <class Stat>
RandTestResult run_permutations(std::span<const int> observed, Stat&& stat,
                                const PermutationPlan& plan, Tail tail) {
  const std::size_t n = observed.size();
  std::size_t n1 = 0;
  for (int a : observed) n1 += (a != 0);
  if (n1 == 0 || n1 == n)
    throw validation_error("permutations need both arms nonempty");

  RandTestResult out;
  out.t_obs = stat(observed);

  const std::uint64_t total = choose_capped(n, n1, plan.exhaustive_cap);
  bool exhaustive;
  switch (plan.mode) {
    case PermutationPlan::Mode::automatic:
      exhaustive = total <= plan.exhaustive_cap;
      break;
    case PermutationPlan::Mode::exhaustive:
      if (total > plan.exhaustive_cap)
        throw validation_error(
            "exhaustive enumeration of C(" + std::to_string(n) + ", " +
            std::to_string(n1) + ") assignments exceeds the cap of " +
            std::to_string(plan.exhaustive_cap));
      exhaustive = true;
      break;
    case PermutationPlan::Mode::monte_carlo:
    default:
      exhaustive = false;
      break;
  }
  out.exhaustive = exhaustive;

  std::vector<int> perm(n);
  auto evaluate = [&](std::span<const int> assignment) {
    ++out.evaluated;
    double t;
    try {
      t = stat(assignment);
    } catch (const error&) {
      ++out.failures;
      ++out.extreme;
      return;
    }
    if (is_extreme(tail, t, out.t_obs)) ++out.extreme;
  };

  if (exhaustive) {
    // lexicographically first arrangement: all zeros, then all ones
    std::fill(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n1), 0);
    std::fill(perm.end() - static_cast<std::ptrdiff_t>(n1), perm.end(), 1);
    do {
      evaluate(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.p = static_cast<double>(out.extreme) /
            static_cast<double>(out.evaluated);
  } else {
    if (plan.draws < 100)
      throw validation_error("Monte Carlo draws must be at least 100");
    std::vector<std::size_t> idx(n);
    for (std::uint64_t b = 1; b <= plan.draws; ++b) {
      rng::Stream rs(rng::derive_stream(plan.seed, b, kTagPermutation));
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::fill(perm.begin(), perm.end(), 0);
      for (std::size_t k = 0; k < n1; ++k) {
        std::size_t j = k + static_cast<std::size_t>(
                                rs.below(static_cast<std::uint64_t>(n - k)));
        std::swap(idx[k], idx[j]);
        perm[idx[k]] = 1;
      }
      evaluate(perm);
    }
    out.p = (1.0 + static_cast<double>(out.extreme)) /
            (1.0 + static_cast<double>(plan.draws));
  }
  return out;
}

// Statistic closure over a fixed response vector.
struct FixedOutcomeStat {
  StatKind kind;
  const double* y;
  std::size_t n;
  std::span<const double* const> cols;
  std::span<const std::string> names;

  double operator()(std::span<const int> assignment) const {
    if (kind == StatKind::diff_means) {
      double s1 = 0.0, s0 = 0.0;
      std::size_t k = 0;
      kern::arm_sums(assignment.data(), y, n, s1, s0, k);
      if (k == 0 || k == n)
        throw numeric_error("degenerate assignment in permutation");
      return s1 / static_cast<double>(k) -
             s0 / static_cast<double>(n - k);
    }
    return robust_t_core(assignment, {y, n}, cols, names);
  }
};

void check_statistic(const TestStatistic& stat, const std::string& tested) {
  if (stat.kind == StatKind::diff_means) {
    if (!stat.adjustment.empty())
      throw validation_error(
          "the difference-in-means statistic takes no adjustment");
    return;
  }
  for (const auto& c : stat.adjustment.predictor_names())
    if (c == tested)
      throw validation_error("tested column '" + tested +
                             "' cannot also adjust the test statistic");
}

}  // namespace

RandTestResult sharp_null_test(const TrialDataset& data,
                               const std::string& outcome_column,
                               const TestStatistic& stat,
                               const PermutationPlan& plan) {
  const std::vector<double>* col = data.find_column(outcome_column);
  if (!col)
    throw validation_error("column '" + outcome_column +
                           "' is not in the dataset");
  check_statistic(stat, outcome_column);
  detail::ResolvedPredictors rp =
      detail::resolve_predictors(data, stat.adjustment);
  FixedOutcomeStat s{stat.kind, col->data(), data.n(), rp.cols, rp.names};
  return run_permutations(data.treatment, s, plan, Tail::two_sided);
}

RandTestResult pseudo_outcome_test(const TrialDataset& data,
                                   const AdjustmentSpec& residualize_on,
                                   StatKind residual_statistic,
                                   const PermutationPlan& plan) {
  detail::ResolvedPredictors rp =
      detail::resolve_predictors(data, residualize_on);
  std::vector<double> coef = fit_pooled(rp.cols, rp.names, data.outcome);
  std::vector<double> resid(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    double fitted = coef[0];
    for (std::size_t j = 0; j < rp.cols.size(); ++j)
      fitted += coef[j + 1] * rp.cols[j][i];
    resid[i] = data.outcome[i] - fitted;
  }
  std::vector<const double*> no_cols;
  std::vector<std::string> no_names;
  FixedOutcomeStat s{residual_statistic, resid.data(), data.n(), no_cols,
                     no_names};
  return run_permutations(data.treatment, s, plan, Tail::two_sided);
}

RandTestResult model_output_test(const TrialDataset& data,
                                 const AdjustmentSpec& spec,
                                 const PermutationPlan& plan) {
  detail::ResolvedPredictors rp = detail::resolve_predictors(data, spec);
  FixedOutcomeStat s{StatKind::robust_t, data.outcome.data(), data.n(),
                     rp.cols, rp.names};
  return run_permutations(data.treatment, s, plan, Tail::two_sided);
}

namespace {

double resolve_epsilon(const TrialDataset& data,
                       const EquivalenceConfig& config) {
  switch (config.rule) {
    case EpsilonRule::explicit_value:
      if (!(config.epsilon > 0.0))
        throw validation_error("equivalence margin must be positive");
      return config.epsilon;
    case EpsilonRule::fraction_of_sd: {
      if (!(config.fraction > 0.0))
        throw validation_error("margin fraction must be positive");
      const std::size_t n = data.n();
      const double mean = kern::sum(data.outcome.data(), n) /
                          static_cast<double>(n);
      const double ss = kern::sumsq_dev(data.outcome.data(), n, mean);
      const double sd = std::sqrt(ss / static_cast<double>(n - 1));
      if (!(sd > 0.0))
        throw validation_error("outcome SD is zero; sd margin rule undefined");
      return config.fraction * sd;
    }
    case EpsilonRule::fraction_of_range: {
      if (!(config.fraction > 0.0))
        throw validation_error("margin fraction must be positive");
      auto [lo, hi] = std::minmax_element(data.outcome.begin(),
                                          data.outcome.end());
      const double range = *hi - *lo;
      if (!(range > 0.0))
        throw validation_error(
            "outcome range is zero; range margin rule undefined");
      return config.fraction * range;
    }
  }
  throw validation_error("unknown margin rule");
}

// Statistic for one boundary: potential controls are imputed from the
// observed assignment at effect `shift`, then re-dosed under each draw.
struct BoundaryStat {
  StatKind kind;
  std::span<const double> base;  // imputed zero-dose outcomes
  double shift;                  // +eps (upper boundary) or -eps (lower)
  std::span<const double* const> cols;
  std::span<const std::string> names;
  mutable std::vector<double> buf;

  double operator()(std::span<const int> assignment) const {
    const std::size_t n = base.size();
    buf.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      buf[i] = base[i] + shift * static_cast<double>(assignment[i]);
    FixedOutcomeStat s{kind, buf.data(), n, cols, names};
    return s(assignment);
  }
};

}  // namespace

EquivalenceResult equivalence_pretest(const TrialDataset& data,
                                      const std::string& nco_column,
                                      const EquivalenceConfig& config) {
  if (!data.ncos.index_of(nco_column))
    throw validation_error("'" + nco_column + "' is not an NCO column");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw validation_error("alpha must lie in (0, 1)");
  check_statistic({config.statistic, config.adjustment}, nco_column);

  const std::vector<double>& nco = *data.find_column(nco_column);
  const double eps = resolve_epsilon(data, config);
  const std::size_t n = data.n();
  detail::ResolvedPredictors rp =
      detail::resolve_predictors(data, config.adjustment);

  // Upper boundary tau = +eps: small observed statistics are evidence that
  // the effect is below the margin.
  std::vector<double> base_upper(n), base_lower(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dose = static_cast<double>(data.treatment[i]);
    base_upper[i] = nco[i] - eps * dose;
    base_lower[i] = nco[i] + eps * dose;
  }
  BoundaryStat upper{config.statistic, base_upper, +eps, rp.cols, rp.names,
                     {}};
  RandTestResult up =
      run_permutations(data.treatment, upper, config.plan, Tail::lower);
  BoundaryStat lower{config.statistic, base_lower, -eps, rp.cols, rp.names,
                     {}};
  RandTestResult lo =
      run_permutations(data.treatment, lower, config.plan, Tail::upper);

  EquivalenceResult out;
  out.epsilon = eps;
  out.p_upper = up.p;
  out.p_lower = lo.p;
  out.t_obs = up.t_obs;  // the statistic on the raw NCO
  out.reject = up.p <= config.alpha && lo.p <= config.alpha;
  return out;
}

GateReport nco_pretests(const TrialDataset& data, const AdjustmentSpec& spec,
                        const PretestConfig& config) {
  if (spec.nco_columns.empty())
    throw validation_error("the pretest gate needs at least one NCO column");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw validation_error("alpha must lie in (0, 1)");

  GateReport out;
  out.kind = config.kind;

  if (config.kind == PretestConfig::Kind::sharp) {
    // Evidence of any NCO effect discards the adjustment.
    bool any_reject = false;
    for (const auto& nco : spec.nco_columns) {
      RandTestResult r =
          sharp_null_test(data, nco, config.statistic, config.plan);
      GateReport::PerNco row;
      row.column = nco;
      row.p = r.p;
      row.reject = r.p <= config.alpha;
      any_reject = any_reject || row.reject;
      out.tests.push_back(std::move(row));
    }
    out.adjusted = !any_reject;
  } else {
    // Adjustment must earn its keep: every NCO has to demonstrate that all
    // individual effects sit inside the margin.
    bool all_equivalent = true;
    for (const auto& nco : spec.nco_columns) {
      EquivalenceConfig ec;
      ec.rule = config.epsilon_rule;
      ec.epsilon = config.epsilon;
      ec.fraction = config.fraction;
      ec.statistic = config.statistic.kind;
      ec.adjustment = config.statistic.adjustment;
      ec.plan = config.plan;
      ec.alpha = config.alpha;
      EquivalenceResult r = equivalence_pretest(data, nco, ec);
      GateReport::PerNco row;
      row.column = nco;
      row.p_lower = r.p_lower;
      row.p_upper = r.p_upper;
      row.epsilon = r.epsilon;
      row.reject = r.reject;
      all_equivalent = all_equivalent && r.reject;
      out.tests.push_back(std::move(row));
    }
    out.adjusted = all_equivalent;
  }
  return out;
}

GatedEstimate pretest_gated_estimate(const TrialDataset& data,
                                     const AdjustmentSpec& spec,
                                     const PretestConfig& config,
                                     Estimand estimand, Correction correction,
                                     double level) {
  GatedEstimate out;
  out.gate = nco_pretests(data, spec, config);
  out.result = analyze(data, out.gate.adjusted ? spec : AdjustmentSpec{},
                       estimand, correction, level);
  return out;
}

}  // namespace ncoadj
