#include "ncoadj/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "ncoadj/errors.hpp"
#include "ncoadj/inference.hpp"
#include "ncoadj/rng.hpp"

namespace ncoadj {

namespace {
constexpr std::uint64_t kTagReplicate = 0x7265706c;  // stream namespace
// 97.5% normal quantile: 95% intervals and alpha = 0.05 Wald rejections.
constexpr double kZ975 = 1.959963984540054;
}  // namespace

void ScenarioParams::validate() const {
  if (n < 4) throw validation_error("scenario n must be at least 4");
  if (!(pi > 0.0 && pi < 1.0))
    throw validation_error("scenario pi must lie in (0, 1)");
  if (!(rho_yx >= 0.0 && rho_yx < 1.0))
    throw validation_error("rho_yx must lie in [0, 1)");
  if (!(rho_yn_given_x >= 0.0 && rho_yn_given_x < 1.0))
    throw validation_error("rho_yn_given_x must lie in [0, 1)");
  if (!(rho_xu > -1.0 && rho_xu < 1.0))
    throw validation_error("rho_xu must lie in (-1, 1)");
  if (beta_n != 0.0 && link != Link::identity)
    throw validation_error(
        "a direct NCO effect (beta_n != 0) is defined for the identity link "
        "only");
  if (replicates == 0)
    throw validation_error("scenario needs at least one replicate");
  if (!std::isfinite(beta) || !std::isfinite(beta_n))
    throw validation_error("scenario effects must be finite");
}

Coefficients derive_coefficients(double rho_yx, double rho_yn_given_x) {
  if (!(rho_yx >= 0.0 && rho_yx < 1.0))
    throw validation_error("rho_yx must lie in [0, 1)");
  if (!(rho_yn_given_x >= 0.0 && rho_yn_given_x < 1.0))
    throw validation_error("rho_yn_given_x must lie in [0, 1)");
  Coefficients c;
  c.beta2 = std::sqrt(rho_yn_given_x / (1.0 - rho_yn_given_x));
  c.beta1 = std::sqrt(rho_yx * rho_yx * (c.beta2 * c.beta2 + 1.0) /
                      (1.0 - rho_yx * rho_yx));
  return c;
}

TrialDataset generate_trial(const ScenarioParams& params,
                            std::uint64_t replicate_index,
                            std::uint64_t* redraws) {
  params.validate();
  const std::size_t n = params.n;
  const Coefficients c =
      derive_coefficients(params.rho_yx, params.rho_yn_given_x);
  rng::Stream rs(rng::derive_stream(params.seed, replicate_index,
                                    kTagReplicate));

  // Draw order is part of the reproducibility contract: assignment vector
  // (redrawn whole while an arm is empty), then per unit (X, U), then the
  // NCO disturbances, then the outcome disturbances.
  std::vector<int> a(n);
  for (;;) {
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rs.bernoulli(params.pi) ? 1 : 0;
      n1 += static_cast<std::size_t>(a[i]);
    }
    if (n1 > 0 && n1 < n) break;
    if (redraws) ++*redraws;
  }

  std::vector<double> x(n), u(n);
  const double rho = params.rho_xu;
  const double rho_c = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = rs.normal();
    const double z2 = rs.normal();
    x[i] = z1;
    u[i] = rho * z1 + rho_c * z2;
  }

  std::vector<double> nco(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double latent = 1.0 + c.beta1 * x[i] + c.beta2 * u[i] + rs.normal();
    if (params.link == Link::identity) {
      nco[i] = latent + params.beta_n * static_cast<double>(a[i]);
    } else {
      nco[i] = 8.0 / (1.0 + std::exp(-latent));
    }
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 1.0 + c.beta1 * x[i] + c.beta2 * u[i] + rs.normal() +
           params.beta * static_cast<double>(a[i]);
  }

  TrialDataset data;
  data.treatment = std::move(a);
  data.outcome = std::move(y);
  data.covariates.add("X", std::move(x));
  data.ncos.add("N", std::move(nco));
  data.design_pi = params.pi;
  return data;
}

AdjustmentSpec adjustment_for(EstimatorKind kind) {
  AdjustmentSpec spec;
  switch (kind) {
    case EstimatorKind::plug_in: break;
    case EstimatorKind::covariate: spec.covariate_columns = {"X"}; break;
    case EstimatorKind::nco: spec.nco_columns = {"N"}; break;
    case EstimatorKind::quantile_nco:
      spec.nco_columns = {"N"};
      spec.quantile_transform_ncos = true;
      break;
    case EstimatorKind::full:
      spec.covariate_columns = {"X"};
      spec.nco_columns = {"N"};
      break;
  }
  return spec;
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::plug_in: return "plug_in";
    case EstimatorKind::covariate: return "covariate";
    case EstimatorKind::nco: return "nco";
    case EstimatorKind::quantile_nco: return "quantile_nco";
    case EstimatorKind::full: return "full";
  }
  return "unknown";
}

std::string link_name(Link link) {
  return link == Link::identity ? "identity" : "logistic8";
}

namespace {

struct CellValue {
  double estimate = 0.0;
  double variance = 0.0;
  bool ok = false;
};

// One replicate's results: estimators x corrections, plus the plug-in
// reference row used by the relative metrics.
struct ReplicateRow {
  std::vector<CellValue> cells;      // est * corr, row-major
  std::vector<CellValue> reference;  // plug-in per correction
  std::uint64_t redraws = 0;
};

void run_replicate(const ScenarioParams& params, std::uint64_t r,
                   std::span<const EstimatorKind> estimators,
                   std::span<const Correction> corrections,
                   ReplicateRow& row) {
  TrialDataset data = generate_trial(params, r, &row.redraws);
  const std::size_t nc = corrections.size();
  row.cells.assign(estimators.size() * nc, {});
  row.reference.assign(nc, {});

  auto fill = [&](const AdjustmentSpec& spec, std::span<CellValue> dest) {
    ArmFits fits;
    std::vector<double> rvec;
    try {
      fits = aipw(data, spec);
      rvec = sandwich_r(data, fits.fit0, fits.fit1, fits.estimate);
    } catch (const error&) {
      return;  // all corrections stay failed for this estimator
    }
    for (std::size_t k = 0; k < nc; ++k) {
      try {
        double variance;
        if (corrections[k] == Correction::neyman) {
          variance = neyman_variance(data);
        } else {
          std::vector<double> cvec =
              correction_factors(corrections[k], data, fits.fit0, fits.fit1);
          variance = sandwich_variance(rvec, cvec);
        }
        dest[k] = {fits.estimate, variance, true};
      } catch (const error&) {
        // leave failed
      }
    }
  };

  fill(AdjustmentSpec{}, row.reference);
  for (std::size_t e = 0; e < estimators.size(); ++e)
    fill(adjustment_for(estimators[e]),
         std::span<CellValue>(row.cells).subspan(e * nc, nc));
}

double median_of(std::vector<double>& v) {
  const std::size_t m = v.size();
  std::sort(v.begin(), v.end());
  if (m == 0) return std::numeric_limits<double>::quiet_NaN();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

ScenarioSummary run_scenario(const ScenarioParams& params,
                             std::span<const EstimatorKind> estimators,
                             std::span<const Correction> corrections,
                             std::size_t threads) {
  params.validate();
  if (estimators.empty() || corrections.empty())
    throw validation_error("run_scenario needs estimators and corrections");

  const std::size_t R = params.replicates;
  std::vector<ReplicateRow> rows(R);
  if (threads == 0) threads = std::thread::hardware_concurrency();
  threads = std::max<std::size_t>(1, std::min(threads, R));

  if (threads == 1) {
    for (std::size_t r = 0; r < R; ++r)
      run_replicate(params, r, estimators, corrections, rows[r]);
  } else {
    // Workers pull replicate indices; every replicate derives its own RNG
    // stream from its index, and aggregation below walks the rows in index
    // order, so the thread count never changes a result.
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (;;) {
        std::size_t r = next.fetch_add(1);
        if (r >= R) return;
        try {
          run_replicate(params, r, estimators, corrections, rows[r]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  ScenarioSummary summary;
  summary.params = params;
  const std::size_t nc = corrections.size();

  for (const auto& row : rows) summary.assignment_redraws += row.redraws;

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    for (std::size_t k = 0; k < nc; ++k) {
      CellSummary cell;
      cell.estimator = estimators[e];
      cell.correction = corrections[k];

      double sum_est = 0.0, sum_abs_err = 0.0, sum_abs_err_ref = 0.0;
      std::size_t covered = 0, rejected = 0;
      std::vector<double> rel_var;
      rel_var.reserve(R);
      for (std::size_t r = 0; r < R; ++r) {
        const CellValue& v = rows[r].cells[e * nc + k];
        const CellValue& ref = rows[r].reference[k];
        if (!v.ok) {
          ++cell.failures;
          continue;
        }
        if (!ref.ok) continue;  // no reference; excluded from relative metrics
        ++cell.used_replicates;
        sum_est += v.estimate;
        sum_abs_err += std::abs(v.estimate - params.beta);
        sum_abs_err_ref += std::abs(ref.estimate - params.beta);
        const double se = std::sqrt(v.variance);
        covered += std::abs(v.estimate - params.beta) <= kZ975 * se;
        if (se > 0.0)
          rejected += std::abs(v.estimate) / se >= kZ975;
        else
          rejected += v.estimate != 0.0;
        rel_var.push_back(ref.variance > 0.0
                              ? v.variance / ref.variance
                              : std::numeric_limits<double>::infinity());
      }
      if (cell.failures > R / 100)
        throw numeric_error(
            "estimator " + estimator_name(cell.estimator) + " with " +
            correction_name(cell.correction) + " failed on " +
            std::to_string(cell.failures) + " of " + std::to_string(R) +
            " replicates (more than 1%); scenario aborted");
      if (cell.used_replicates > 0) {
        const double used = static_cast<double>(cell.used_replicates);
        cell.mean_estimate = sum_est / used;
        cell.relative_abs_bias =
            sum_abs_err_ref > 0.0 ? sum_abs_err / sum_abs_err_ref
                                  : std::numeric_limits<double>::infinity();
        cell.coverage = static_cast<double>(covered) / used;
        cell.rejection_rate = static_cast<double>(rejected) / used;
        cell.median_relative_efficiency = median_of(rel_var);
      }
      if (cell.failures > 0)
        summary.warnings.push_back(
            estimator_name(cell.estimator) + "/" +
            correction_name(cell.correction) + ": " +
            std::to_string(cell.failures) + " of " + std::to_string(R) +
            " replicates failed and were excluded");
      summary.cells.push_back(std::move(cell));
    }
  }
  return summary;
}

namespace {

using nlohmann::json;

Link parse_link(const std::string& s) {
  if (s == "identity") return Link::identity;
  if (s == "logistic8") return Link::logistic8;
  throw validation_error("unknown link '" + s + "'");
}

EstimatorKind parse_estimator(const std::string& s) {
  if (s == "plug_in") return EstimatorKind::plug_in;
  if (s == "covariate") return EstimatorKind::covariate;
  if (s == "nco") return EstimatorKind::nco;
  if (s == "quantile_nco") return EstimatorKind::quantile_nco;
  if (s == "full") return EstimatorKind::full;
  throw validation_error("unknown estimator '" + s + "'");
}

Correction parse_correction(const std::string& s) {
  if (s == "hc0") return Correction::hc0;
  if (s == "hc1") return Correction::hc1;
  if (s == "hc2") return Correction::hc2;
  if (s == "hc3") return Correction::hc3;
  if (s == "neyman") return Correction::neyman;
  throw validation_error("unknown correction '" + s + "'");
}

// A scenario axis may be a scalar or an array; arrays expand to the
// cartesian product in declaration order.
std::vector<json> axis_values(const json& cfg, const char* key,
                              const json& fallback) {
  if (!cfg.contains(key)) return {fallback};
  const json& v = cfg.at(key);
  if (v.is_array()) {
    if (v.empty())
      throw validation_error(std::string("axis '") + key + "' is empty");
    return std::vector<json>(v.begin(), v.end());
  }
  return {v};
}

}  // namespace

GridConfig parse_grid_config(const std::string& json_text) {
  json cfg;
  try {
    cfg = json::parse(json_text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("config is not valid JSON: ") +
                           e.what());
  }
  if (!cfg.is_object())
    throw validation_error("config must be a JSON object");

  GridConfig out;
  const std::uint64_t root_seed = cfg.value("seed", std::uint64_t{0});
  const std::size_t replicates = cfg.value("replicates", std::size_t{1000});
  out.threads = cfg.value("threads", std::size_t{0});

  for (const auto& s : cfg.value("estimators",
                                 json::array({"plug_in", "covariate", "nco",
                                              "quantile_nco", "full"})))
    out.estimators.push_back(parse_estimator(s.get<std::string>()));
  for (const auto& s :
       cfg.value("corrections", json::array({"hc0", "hc1", "hc2", "hc3"})))
    out.corrections.push_back(parse_correction(s.get<std::string>()));

  try {
    std::vector<json> ns = axis_values(cfg, "n", json(40));
    std::vector<json> pis = axis_values(cfg, "pi", json(0.8));
    std::vector<json> betas = axis_values(cfg, "beta", json(1.0));
    std::vector<json> beta_ns = axis_values(cfg, "beta_n", json(0.0));
    std::vector<json> rho_yxs = axis_values(cfg, "rho_yx", json(0.3));
    std::vector<json> rho_yns =
        axis_values(cfg, "rho_yn_given_x", json(0.0));
    std::vector<json> rho_xus = axis_values(cfg, "rho_xu", json(0.0));
    std::vector<json> links = axis_values(cfg, "link", json("identity"));

    std::uint64_t index = 0;
    for (const auto& n : ns)
      for (const auto& link : links)
        for (const auto& rho_yn : rho_yns)
          for (const auto& rho_yx : rho_yxs)
            for (const auto& rho_xu : rho_xus)
              for (const auto& beta : betas)
                for (const auto& beta_n : beta_ns)
                  for (const auto& pi : pis) {
                    ScenarioParams p;
                    p.n = n.get<std::size_t>();
                    p.pi = pi.get<double>();
                    p.beta = beta.get<double>();
                    p.beta_n = beta_n.get<double>();
                    p.rho_yx = rho_yx.get<double>();
                    p.rho_yn_given_x = rho_yn.get<double>();
                    p.rho_xu = rho_xu.get<double>();
                    p.link = parse_link(link.get<std::string>());
                    p.replicates = replicates;
                    p.seed = rng::derive_stream(root_seed, index++,
                                                0x7363656e);  // scenarios
                    p.validate();
                    out.scenarios.push_back(p);
                  }
  } catch (const json::exception& e) {
    throw validation_error(std::string("bad config value: ") + e.what());
  }
  if (out.scenarios.empty())
    throw validation_error("config expands to no scenarios");
  return out;
}

void write_results_csv(std::span<const ScenarioSummary> results,
                       std::ostream& out) {
  out << "n,pi,beta,beta_n,rho_yx,rho_yn_given_x,rho_xu,link,replicates,seed,"
         "estimator,correction,metric,value\n";
  char buf[512];
  for (const auto& s : results) {
    const auto& p = s.params;
    for (const auto& cell : s.cells) {
      auto row = [&](const char* metric, double value) {
        std::snprintf(buf, sizeof(buf),
                      "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%s,%zu,%llu,"
                      "%s,%s,%s,%.10g\n",
                      p.n, p.pi, p.beta, p.beta_n, p.rho_yx, p.rho_yn_given_x,
                      p.rho_xu, link_name(p.link).c_str(), p.replicates,
                      static_cast<unsigned long long>(p.seed),
                      estimator_name(cell.estimator).c_str(),
                      correction_name(cell.correction).c_str(), metric,
                      value);
        out << buf;
      };
      row("mean_estimate", cell.mean_estimate);
      row("relative_abs_bias", cell.relative_abs_bias);
      row("coverage", cell.coverage);
      row("median_relative_efficiency", cell.median_relative_efficiency);
      row(p.beta == 0.0 ? "type1" : "power", cell.rejection_rate);
      row("used_replicates", static_cast<double>(cell.used_replicates));
      row("failures", static_cast<double>(cell.failures));
    }
  }
}

}  // namespace ncoadj
