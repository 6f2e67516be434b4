#include "ncoadj/inference.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "ncoadj/errors.hpp"
#include "ncoadj/kernels.hpp"
#include "src/resolve.hpp"

namespace ncoadj {

std::vector<double> sandwich_r(const TrialDataset& data,
                               const WorkingModelFit& fit0,
                               const WorkingModelFit& fit1, double estimate) {
  const std::size_t n = data.n();
  if (fit0.fitted_all.size() != n || fit1.fitted_all.size() != n)
    throw validation_error("working-model fits do not match the dataset");

  double ysum1 = 0.0, ysum0 = 0.0;
  std::size_t n1 = 0;
  kern::arm_sums(data.treatment.data(), data.outcome.data(), n, ysum1, ysum0,
                 n1);
  const std::size_t n0 = n - n1;
  const double dn1 = static_cast<double>(n1), dn0 = static_cast<double>(n0);
  const double ybar1 = ysum1 / dn1, ybar0 = ysum0 / dn0;
  const double pi = dn1 / static_cast<double>(n);

  // Fitted-value means taken over all n units, not just the own arm.
  const double hbar0 = kern::sum(fit0.fitted_all.data(), n) /
                       static_cast<double>(n);
  const double hbar1 = kern::sum(fit1.fitted_all.data(), n) /
                       static_cast<double>(n);

  const double mean_shift = (ybar0 - hbar0) / dn0 + (ybar1 - hbar1) / dn1;
  const double psi_over_n = estimate / static_cast<double>(n);

  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(data.treatment[i]);
    const double w = a / dn1 - (1.0 - a) / dn0;
    const double centered = a - pi;
    r[i] = w * data.outcome[i] - psi_over_n -
           centered *
               (fit0.fitted_all[i] / dn0 + fit1.fitted_all[i] / dn1) -
           centered * mean_shift;
  }
  return r;
}

std::vector<double> correction_factors(Correction c, const TrialDataset& data,
                                       const WorkingModelFit& fit0,
                                       const WorkingModelFit& fit1) {
  const std::size_t n = data.n();
  const std::size_t n1 = data.n_treated();
  const std::size_t n0 = n - n1;
  std::vector<double> out(n, 1.0);

  switch (c) {
    case Correction::hc0:
      return out;
    case Correction::hc1: {
      const std::size_t p0 = fit0.p, p1 = fit1.p;
      if (n0 < 2 || n1 < 2)
        throw validation_error("hc1 needs at least 2 units per arm");
      if (n0 <= p0 + 1 || n1 <= p1 + 1)
        throw validation_error(
            "hc1: an arm has no residual degrees of freedom");
      const double num = 1.0 / static_cast<double>(n0 - p0 - 1) +
                         1.0 / static_cast<double>(n1 - p1 - 1);
      const double den = 1.0 / static_cast<double>(n0 - 1) +
                         1.0 / static_cast<double>(n1 - 1);
      const double factor = std::sqrt(num / den);
      for (double& v : out) v = factor;
      return out;
    }
    case Correction::hc2:
    case Correction::hc3: {
      if (fit0.leverages.size() != n0 || fit1.leverages.size() != n1)
        throw validation_error("hc2/hc3 need fits built with leverages");
      std::size_t pos0 = 0, pos1 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double h = data.treatment[i] ? fit1.leverages[pos1++]
                                           : fit0.leverages[pos0++];
        const double gap = 1.0 - h;
        if (gap <= 1e-8)
          throw validation_error(
              "leverage=1 at unit " + std::to_string(i + 1) + " (arm " +
              std::to_string(data.treatment[i]) +
              "); hc2/hc3 undefined. The arm is too small for the model");
        out[i] = c == Correction::hc2 ? 1.0 / std::sqrt(gap) : 1.0 / gap;
      }
      return out;
    }
    case Correction::neyman:
      throw validation_error(
          "the Neyman variance is not a per-unit correction");
  }
  return out;
}

double sandwich_variance(std::span<const double> r, std::span<const double> c) {
  if (r.size() != c.size())
    throw validation_error("influence and correction lengths differ");
  return kern::weighted_sumsq(c.data(), r.data(), r.size());
}

WaldInterval wald(double estimate, double variance, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw validation_error("confidence level must lie in (0, 1)");
  if (!(variance >= 0.0))
    throw validation_error("variance must be nonnegative");
  boost::math::normal dist;
  const double z = boost::math::quantile(dist, 0.5 + level / 2.0);
  WaldInterval out;
  out.se = std::sqrt(variance);
  out.ci_low = estimate - z * out.se;
  out.ci_high = estimate + z * out.se;
  if (out.se > 0.0) {
    out.p_value = 2.0 * boost::math::cdf(dist, -std::abs(estimate) / out.se);
  } else {
    out.p_value = estimate == 0.0 ? 1.0 : 0.0;
  }
  return out;
}

double neyman_variance(const TrialDataset& data) {
  const std::size_t n = data.n();
  double s1 = 0.0, s0 = 0.0;
  std::size_t n1 = 0;
  kern::arm_sums(data.treatment.data(), data.outcome.data(), n, s1, s0, n1);
  const std::size_t n0 = n - n1;
  if (n1 < 2 || n0 < 2)
    throw validation_error("the Neyman variance needs 2 units per arm");
  const double m1 = s1 / static_cast<double>(n1);
  const double m0 = s0 / static_cast<double>(n0);
  double ss1 = 0.0, ss0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = data.outcome[i] - (data.treatment[i] ? m1 : m0);
    (data.treatment[i] ? ss1 : ss0) += d * d;
  }
  return ss1 / static_cast<double>(n1 - 1) / static_cast<double>(n1) +
         ss0 / static_cast<double>(n0 - 1) / static_cast<double>(n0);
}

double robust_t_core(std::span<const int> treatment, std::span<const double> y,
                     std::span<const double* const> predictor_cols,
                     std::span<const std::string> predictor_names) {
  const std::size_t n = treatment.size();
  const std::size_t p = predictor_cols.size();

  WorkingModelFit fit0 = fit_subset(treatment, 0, predictor_cols,
                                    predictor_names, y, false);
  WorkingModelFit fit1 = fit_subset(treatment, 1, predictor_cols,
                                    predictor_names, y, false);
  const std::size_t m1 = fit1.n_arm, m0 = fit0.n_arm;

  std::vector<double> zbar(p);
  for (std::size_t j = 0; j < p; ++j)
    zbar[j] = kern::sum(predictor_cols[j], n) / static_cast<double>(n);

  double acc1 = 0.0, acc0 = 0.0, ss1 = 0.0, ss0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (treatment[i]) {
      double adj = y[i];
      for (std::size_t j = 0; j < p; ++j)
        adj -= fit1.coefficients[j + 1] * (predictor_cols[j][i] - zbar[j]);
      acc1 += adj;
      const double e = y[i] - fit1.fitted_all[i];
      ss1 += e * e;
    } else {
      double adj = y[i];
      for (std::size_t j = 0; j < p; ++j)
        adj -= fit0.coefficients[j + 1] * (predictor_cols[j][i] - zbar[j]);
      acc0 += adj;
      const double e = y[i] - fit0.fitted_all[i];
      ss0 += e * e;
    }
  }
  const double est = acc1 / static_cast<double>(m1) -
                     acc0 / static_cast<double>(m0);
  const double var = ss1 / static_cast<double>(m1 - 1) /
                         static_cast<double>(m1) +
                     ss0 / static_cast<double>(m0 - 1) /
                         static_cast<double>(m0);
  // Residual variance at rounding scale is zero in substance: constant
  // outcomes can leave ulp-level residuals after the QR solve.
  const double msq = kern::dot(y.data(), y.data(), n) / static_cast<double>(n);
  if (!(var > 1e-24 * msq))
    throw numeric_error("robust t undefined: zero residual variance");
  return est / std::sqrt(var);
}

double robust_t(const TrialDataset& data, const AdjustmentSpec& spec) {
  detail::ResolvedPredictors rp = detail::resolve_predictors(data, spec);
  return robust_t_core(data.treatment, data.outcome, rp.cols, rp.names);
}

}  // namespace ncoadj
