#include "ncoadj/ols.hpp"

#include <algorithm>
#include <cmath>

#include "ncoadj/errors.hpp"
#include "ncoadj/kernels.hpp"

namespace ncoadj {

double WorkingModelFit::max_leverage() const {
  double m = 0.0;
  for (double h : leverages) m = std::max(m, h);
  return m;
}

namespace {

constexpr double kRankRelTol = 1e-10;

// Column-major dense QR with column pivoting; reflector tails stored below
// the diagonal with the v_k = 1 convention.
struct PivotedQr {
  std::size_t m = 0;  // rows
  std::size_t K = 0;  // columns (intercept included)
  std::vector<double> a;
  std::vector<double> beta;
  std::vector<std::size_t> piv;  // position -> original column
};

// w := (I - beta_k u u') w for reflector k; u has the implied unit head.
void apply_reflector(const PivotedQr& qr, std::size_t k, double* w) {
  const double* u = qr.a.data() + k * qr.m;
  const std::size_t tail = qr.m - k - 1;
  double s = w[k] + kern::dot(u + k + 1, w + k + 1, tail);
  s *= qr.beta[k];
  w[k] -= s;
  kern::axpy(-s, u + k + 1, w + k + 1, tail);
}

// Factorize in place. Returns the first rank-deficient position, or K.
std::size_t factorize(PivotedQr& qr) {
  const std::size_t m = qr.m, K = qr.K;
  qr.beta.assign(K, 0.0);
  qr.piv.resize(K);
  for (std::size_t j = 0; j < K; ++j) qr.piv[j] = j;
  double r00 = 0.0;

  for (std::size_t k = 0; k < K; ++k) {
    // pivot the column with the largest remaining tail norm into position k
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < K; ++j) {
      double norm2 = kern::sumsq_dev(qr.a.data() + j * m + k, m - k, 0.0);
      if (norm2 > best_norm) {
        best_norm = norm2;
        best = j;
      }
    }
    if (best != k) {
      for (std::size_t i = 0; i < m; ++i)
        std::swap(qr.a[best * m + i], qr.a[k * m + i]);
      std::swap(qr.piv[best], qr.piv[k]);
    }

    double* col = qr.a.data() + k * m;
    double sigma = kern::sumsq_dev(col + k + 1, m - k - 1, 0.0);
    double norm = std::sqrt(col[k] * col[k] + sigma);
    if (k == 0) r00 = norm;
    if (!(norm > kRankRelTol * r00) || !std::isfinite(norm)) return k;

    double alpha = col[k] >= 0.0 ? -norm : norm;
    double tau = col[k] - alpha;  // v_k before normalization; |tau| >= norm
    for (std::size_t i = k + 1; i < m; ++i) col[i] /= tau;
    qr.beta[k] = 2.0 * tau * tau / (tau * tau + sigma);
    col[k] = alpha;

    for (std::size_t j = k + 1; j < K; ++j)
      apply_reflector(qr, k, qr.a.data() + j * m);
  }
  return K;
}

// Least-squares coefficients in original column order.
std::vector<double> solve(const PivotedQr& qr, std::vector<double> y) {
  const std::size_t K = qr.K;
  for (std::size_t k = 0; k < K; ++k) apply_reflector(qr, k, y.data());
  std::vector<double> c(K, 0.0);
  for (std::size_t k = K; k-- > 0;) {
    double s = y[k];
    for (std::size_t j = k + 1; j < K; ++j) s -= qr.a[j * qr.m + k] * c[j];
    c[k] = s / qr.a[k * qr.m + k];
  }
  std::vector<double> out(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) out[qr.piv[k]] = c[k];
  return out;
}

// Hat diagonal: row sums of squares over the thin-Q columns.
std::vector<double> hat_diagonal(const PivotedQr& qr) {
  std::vector<double> lev(qr.m, 0.0);
  std::vector<double> w(qr.m);
  for (std::size_t k = 0; k < qr.K; ++k) {
    std::fill(w.begin(), w.end(), 0.0);
    w[k] = 1.0;
    for (std::size_t j = k + 1; j-- > 0;) apply_reflector(qr, j, w.data());
    for (std::size_t i = 0; i < qr.m; ++i) lev[i] += w[i] * w[i];
  }
  return lev;
}

std::string offending_columns(const PivotedQr& qr, std::size_t from,
                              std::span<const std::string> names) {
  std::string out;
  for (std::size_t k = from; k < qr.K; ++k) {
    if (!out.empty()) out += ", ";
    std::size_t orig = qr.piv[k];
    out += orig == 0 ? std::string("(intercept)") : names[orig - 1];
  }
  return out;
}

}  // namespace

WorkingModelFit fit_subset(std::span<const int> select, int arm,
                           std::span<const double* const> predictor_cols,
                           std::span<const std::string> predictor_names,
                           std::span<const double> y, bool want_leverages) {
  const std::size_t n = select.size();
  const std::size_t p = predictor_cols.size();
  const std::size_t K = p + 1;

  std::vector<std::size_t> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (select[i] == arm) rows.push_back(i);
  const std::size_t m = rows.size();
  if (m < p + 2)
    throw validation_error(
        "arm " + std::to_string(arm) + " has " + std::to_string(m) +
        " units; fitting " + std::to_string(p) +
        " predictor(s) needs at least " + std::to_string(p + 2));

  PivotedQr qr;
  qr.m = m;
  qr.K = K;
  qr.a.resize(m * K);
  for (std::size_t i = 0; i < m; ++i) qr.a[i] = 1.0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < m; ++i)
      qr.a[(j + 1) * m + i] = predictor_cols[j][rows[i]];

  std::size_t rank_at = factorize(qr);
  if (rank_at < K)
    throw numeric_error("rank-deficient design in arm " + std::to_string(arm) +
                        "; dependent column(s): " +
                        offending_columns(qr, rank_at, predictor_names));

  std::vector<double> yg(m);
  for (std::size_t i = 0; i < m; ++i) yg[i] = y[rows[i]];

  WorkingModelFit fit;
  fit.arm = arm;
  fit.predictor_names.assign(predictor_names.begin(), predictor_names.end());
  fit.n_arm = m;
  fit.p = p;
  fit.coefficients = solve(qr, std::move(yg));
  for (double c : fit.coefficients)
    if (!std::isfinite(c))
      throw numeric_error("non-finite coefficient in arm " +
                          std::to_string(arm));

  fit.fitted_all.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = fit.coefficients[0];
    for (std::size_t j = 0; j < p; ++j)
      v += fit.coefficients[j + 1] * predictor_cols[j][i];
    fit.fitted_all[i] = v;
  }

  if (want_leverages) fit.leverages = hat_diagonal(qr);
  return fit;
}

WorkingModelFit fit_arm(const TrialDataset& data, int arm,
                        std::span<const std::string> predictors) {
  std::vector<const double*> cols;
  cols.reserve(predictors.size());
  for (const auto& name : predictors) {
    if (data.covariates.index_of(name) || data.ncos.index_of(name)) {
      cols.push_back(data.find_column(name)->data());
    } else {
      throw validation_error("predictor '" + name +
                             "' is not a covariate or NCO column");
    }
  }
  return fit_subset(data.treatment, arm, cols, predictors, data.outcome,
                    /*want_leverages=*/true);
}

std::vector<double> fit_pooled(std::span<const double* const> cols,
                               std::span<const std::string> names,
                               std::span<const double> y) {
  const std::size_t n = y.size();
  const std::size_t p = cols.size();
  if (n < p + 2)
    throw validation_error("pooled fit of " + std::to_string(p) +
                           " predictor(s) needs at least " +
                           std::to_string(p + 2) + " rows, got " +
                           std::to_string(n));
  PivotedQr qr;
  qr.m = n;
  qr.K = p + 1;
  qr.a.resize(n * (p + 1));
  for (std::size_t i = 0; i < n; ++i) qr.a[i] = 1.0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) qr.a[(j + 1) * n + i] = cols[j][i];

  std::size_t rank_at = factorize(qr);
  if (rank_at < qr.K)
    throw numeric_error("rank-deficient pooled design; dependent column(s): " +
                        offending_columns(qr, rank_at, names));
  std::vector<double> coef =
      solve(qr, std::vector<double>(y.begin(), y.end()));
  for (double c : coef)
    if (!std::isfinite(c))
      throw numeric_error("non-finite coefficient in pooled fit");
  return coef;
}

}  // namespace ncoadj
