#include "ncoadj/estimators.hpp"

#include <cmath>

#include "ncoadj/errors.hpp"
#include "ncoadj/inference.hpp"
#include "ncoadj/kernels.hpp"
#include "src/resolve.hpp"

namespace ncoadj {

std::vector<std::string> AdjustmentSpec::predictor_names() const {
  std::vector<std::string> out = covariate_columns;
  out.insert(out.end(), nco_columns.begin(), nco_columns.end());
  return out;
}

namespace detail {

ResolvedPredictors resolve_predictors(const TrialDataset& data,
                                      const AdjustmentSpec& spec) {
  ResolvedPredictors r;
  r.owned.reserve(spec.nco_columns.size());
  for (const auto& name : spec.covariate_columns) {
    auto ix = data.covariates.index_of(name);
    if (!ix)
      throw validation_error("'" + name + "' is not a covariate column");
    r.cols.push_back(data.covariates.values[*ix].data());
    r.names.push_back(name);
  }
  for (const auto& name : spec.nco_columns) {
    auto ix = data.ncos.index_of(name);
    if (!ix) throw validation_error("'" + name + "' is not an NCO column");
    if (spec.quantile_transform_ncos) {
      r.owned.push_back(empirical_quantiles(data.ncos.values[*ix]));
      r.cols.push_back(r.owned.back().data());
    } else {
      r.cols.push_back(data.ncos.values[*ix].data());
    }
    r.names.push_back(name);
  }
  return r;
}

}  // namespace detail

double plug_in(const TrialDataset& data) {
  double s1 = 0.0, s0 = 0.0;
  std::size_t n1 = 0;
  kern::arm_sums(data.treatment.data(), data.outcome.data(), data.n(), s1, s0,
                 n1);
  const std::size_t n0 = data.n() - n1;
  if (n1 == 0 || n0 == 0) throw validation_error("an arm is empty");
  return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
}

namespace {

ArmFits fit_both_arms(const TrialDataset& data, const AdjustmentSpec& spec) {
  detail::ResolvedPredictors rp = detail::resolve_predictors(data, spec);
  ArmFits out;
  out.pi_hat = data.pi_hat();
  out.fit0 = fit_subset(data.treatment, 0, rp.cols, rp.names, data.outcome,
                        /*want_leverages=*/true);
  out.fit1 = fit_subset(data.treatment, 1, rp.cols, rp.names, data.outcome,
                        /*want_leverages=*/true);
  return out;
}

}  // namespace

ArmFits aipw(const TrialDataset& data, const AdjustmentSpec& spec) {
  ArmFits out = fit_both_arms(data, spec);
  if (spec.empty()) {
    // The augmentation is identically zero; bypass it so the result matches
    // plug_in bit for bit.
    out.estimate = plug_in(data);
    return out;
  }
  const std::size_t n = data.n();
  const double pi = out.pi_hat;
  double aug = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    aug += (data.treatment[i] - pi) * (out.fit0.fitted_all[i] / (1.0 - pi) +
                                       out.fit1.fitted_all[i] / pi);
  }
  out.estimate = plug_in(data) - aug / static_cast<double>(n);
  return out;
}

ArmFits lin_sate(const TrialDataset& data, const AdjustmentSpec& spec) {
  ArmFits out = fit_both_arms(data, spec);
  if (spec.empty()) {
    out.estimate = plug_in(data);
    return out;
  }
  detail::ResolvedPredictors rp = detail::resolve_predictors(data, spec);
  const std::size_t n = data.n();
  const std::size_t p = rp.cols.size();
  std::vector<double> zbar(p);
  for (std::size_t j = 0; j < p; ++j)
    zbar[j] = kern::sum(rp.cols[j], n) / static_cast<double>(n);

  double acc1 = 0.0, acc0 = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.treatment[i]) {
      double adj = data.outcome[i];
      for (std::size_t j = 0; j < p; ++j)
        adj -= out.fit1.coefficients[j + 1] * (rp.cols[j][i] - zbar[j]);
      acc1 += adj;
      ++n1;
    } else {
      double adj = data.outcome[i];
      for (std::size_t j = 0; j < p; ++j)
        adj -= out.fit0.coefficients[j + 1] * (rp.cols[j][i] - zbar[j]);
      acc0 += adj;
    }
  }
  out.estimate = acc1 / static_cast<double>(n1) -
                 acc0 / static_cast<double>(n - n1);
  return out;
}

EstimateResult analyze(const TrialDataset& data, const AdjustmentSpec& spec,
                       Estimand estimand, Correction correction,
                       double level) {
  if (!(level > 0.0 && level < 1.0))
    throw validation_error("confidence level must lie in (0, 1)");
  if (correction == Correction::neyman && estimand != Estimand::sate)
    throw validation_error(
        "the Neyman variance applies to the sample estimand only");

  ArmFits fits = estimand == Estimand::sate ? lin_sate(data, spec)
                                            : aipw(data, spec);
  double variance;
  if (correction == Correction::neyman) {
    variance = neyman_variance(data);
  } else {
    std::vector<double> r = sandwich_r(data, fits.fit0, fits.fit1,
                                       fits.estimate);
    std::vector<double> c =
        correction_factors(correction, data, fits.fit0, fits.fit1);
    variance = sandwich_variance(r, c);
  }
  WaldInterval w = wald(fits.estimate, variance, level);

  EstimateResult out;
  out.estimand = estimand;
  out.correction = correction;
  out.adjustment = spec;
  out.estimate = fits.estimate;
  out.variance = variance;
  out.se = w.se;
  out.ci_low = w.ci_low;
  out.ci_high = w.ci_high;
  out.p_value = w.p_value;
  out.pi_hat = fits.pi_hat;
  out.level = level;
  out.n = data.n();
  out.n_treated = data.n_treated();
  return out;
}

std::string correction_name(Correction c) {
  switch (c) {
    case Correction::hc0: return "hc0";
    case Correction::hc1: return "hc1";
    case Correction::hc2: return "hc2";
    case Correction::hc3: return "hc3";
    case Correction::neyman: return "neyman";
  }
  return "unknown";
}

std::string estimand_name(Estimand e) {
  return e == Estimand::ate ? "ate" : "sate";
}

}  // namespace ncoadj
