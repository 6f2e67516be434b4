// ncoadj: estimation, pretesting, randomization tests, sensitivity analysis,
// and simulation for randomized trials with negative control outcomes.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ncoadj/dataset.hpp"
#include "ncoadj/errors.hpp"
#include "ncoadj/estimators.hpp"
#include "ncoadj/inference.hpp"
#include "ncoadj/randinf.hpp"
#include "ncoadj/sensitivity.hpp"
#include "ncoadj/simulation.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using json = nlohmann::ordered_json;
using namespace ncoadj;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const auto b = item.find_last_not_of(" \t");
    out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

// A value-typed cell so one table writer serves CSV and JSON output.
struct Cell {
  enum class Kind { text, number, boolean, none } kind = Kind::none;
  std::string text;
  double number = 0.0;
  bool flag = false;

  static Cell str(std::string s) { return {Kind::text, std::move(s), 0, 0}; }
  static Cell num(double v) { return {Kind::number, {}, v, 0}; }
  static Cell yes_no(bool b) { return {Kind::boolean, {}, 0, b}; }
  static Cell blank() { return {}; }
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

void write_table(const Table& t, bool as_json, std::ostream& out) {
  if (as_json) {
    json arr = json::array();
    for (const auto& row : t.rows) {
      json obj;
      for (std::size_t j = 0; j < t.columns.size(); ++j) {
        const Cell& c = row[j];
        switch (c.kind) {
          case Cell::Kind::text: obj[t.columns[j]] = c.text; break;
          case Cell::Kind::number:
            if (std::isfinite(c.number))
              obj[t.columns[j]] = c.number;
            else
              obj[t.columns[j]] = fmt(c.number);
            break;
          case Cell::Kind::boolean: obj[t.columns[j]] = c.flag; break;
          case Cell::Kind::none: obj[t.columns[j]] = nullptr; break;
        }
      }
      arr.push_back(std::move(obj));
    }
    out << arr.dump(2) << '\n';
    return;
  }
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    out << (j ? "," : "") << csv_escape(t.columns[j]);
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      if (j) out << ',';
      const Cell& c = row[j];
      switch (c.kind) {
        case Cell::Kind::text: out << csv_escape(c.text); break;
        case Cell::Kind::number: out << fmt(c.number); break;
        case Cell::Kind::boolean: out << (c.flag ? "true" : "false"); break;
        case Cell::Kind::none: break;
      }
    }
    out << '\n';
  }
}

// Flags shared by every subcommand that reads a trial CSV.
struct DataOptions {
  std::string data;
  std::string treatment = "A";
  std::string outcome = "Y";
  std::string covariates;
  std::string ncos;
  double pi = std::nan("");
  std::vector<std::string> log10_cols;
  std::vector<std::string> quantile_cols;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--data", o.data, "trial CSV file")->required();
  cmd->add_option("--treatment", o.treatment, "treatment column (default A)");
  cmd->add_option("--outcome", o.outcome, "outcome column (default Y)");
  cmd->add_option("--covariates", o.covariates,
                  "comma-separated covariate columns");
  cmd->add_option("--ncos", o.ncos,
                  "comma-separated negative control outcome columns");
  cmd->add_option("--pi", o.pi,
                  "design assignment probability (default: empirical)");
  cmd->add_option("--log10", o.log10_cols,
                  "apply log10(x+offset) to a column, as NAME or NAME:OFFSET")
      ->allow_extra_args(false);
  cmd->add_option("--quantile", o.quantile_cols,
                  "replace a column by its empirical quantiles")
      ->allow_extra_args(false);
}

TrialDataset load_dataset(const DataOptions& o) {
  CsvSchema schema;
  schema.treatment = o.treatment;
  schema.outcome = o.outcome;
  schema.covariates = split_commas(o.covariates);
  schema.ncos = split_commas(o.ncos);
  const double pi = std::isnan(o.pi) ? 0.5 : o.pi;
  TrialDataset d = load_csv(o.data, schema, pi);
  if (std::isnan(o.pi)) d.design_pi = d.pi_hat();

  for (const std::string& arg : o.log10_cols) {
    Transform t;
    t.kind = Transform::Kind::log10_offset;
    const auto colon = arg.rfind(':');
    if (colon == std::string::npos) {
      t.column = arg;
    } else {
      t.column = arg.substr(0, colon);
      try {
        t.offset = std::stod(arg.substr(colon + 1));
      } catch (const std::exception&) {
        throw validation_error("bad --log10 offset in '" + arg + "'");
      }
    }
    d = apply_transform(d, t);
  }
  for (const std::string& col : o.quantile_cols) {
    Transform t;
    t.kind = Transform::Kind::empirical_quantile;
    t.column = col;
    d = apply_transform(d, t);
  }
  return d;
}

json echo_data_options(const DataOptions& o) {
  json p;
  p["data"] = o.data;
  p["treatment"] = o.treatment;
  p["outcome"] = o.outcome;
  p["covariates"] = split_commas(o.covariates);
  p["ncos"] = split_commas(o.ncos);
  if (std::isnan(o.pi))
    p["pi"] = "empirical";
  else
    p["pi"] = o.pi;
  p["log10"] = o.log10_cols;
  p["quantile"] = o.quantile_cols;
  return p;
}

Correction parse_correction(const std::string& s) {
  if (s == "hc0") return Correction::hc0;
  if (s == "hc1") return Correction::hc1;
  if (s == "hc2") return Correction::hc2;
  if (s == "hc3") return Correction::hc3;
  if (s == "neyman") return Correction::neyman;
  throw validation_error("unknown correction '" + s +
                         "' (hc0, hc1, hc2, hc3, neyman)");
}

Estimand parse_estimand(const std::string& s) {
  if (s == "ate") return Estimand::ate;
  if (s == "sate") return Estimand::sate;
  throw validation_error("unknown estimand '" + s + "' (ate, sate)");
}

StatKind parse_statistic(const std::string& s) {
  if (s == "diff-means") return StatKind::diff_means;
  if (s == "robust-t") return StatKind::robust_t;
  throw validation_error("unknown statistic '" + s +
                         "' (diff-means, robust-t)");
}

struct PlanOptions {
  std::uint64_t draws = 1000;
  std::uint64_t seed = 0;
  bool exhaustive = false;
  std::uint64_t cap = 200000;
};

void add_plan_options(CLI::App* cmd, PlanOptions& o) {
  cmd->add_option("--B", o.draws, "Monte Carlo permutation draws");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_flag("--exhaustive", o.exhaustive,
                "enumerate every assignment (errors if too many)");
  cmd->add_option("--exhaustive-cap", o.cap,
                  "max assignments enumerated in automatic mode");
}

PermutationPlan make_plan(const PlanOptions& o) {
  PermutationPlan plan;
  plan.mode = o.exhaustive ? PermutationPlan::Mode::exhaustive
                           : PermutationPlan::Mode::automatic;
  plan.draws = o.draws;
  plan.seed = o.seed;
  plan.exhaustive_cap = o.cap;
  return plan;
}

json echo_plan(const PlanOptions& o) {
  json p;
  p["B"] = o.draws;
  p["seed"] = o.seed;
  p["exhaustive"] = o.exhaustive;
  p["exhaustive_cap"] = o.cap;
  return p;
}

struct OutputOptions {
  std::string out;
  std::string manifest;
  bool as_json = false;
};

void add_output_options(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--out", o.out, "write the result table here, not stdout");
  cmd->add_option("--manifest", o.manifest,
                  "manifest path (default: sidecar of --out, or "
                  "ncoadj_manifest.json)");
  cmd->add_flag("--json", o.as_json, "emit JSON instead of CSV");
}

class Run {
 public:
  Run(std::string subcommand, const OutputOptions& out_opts)
      : sub_(std::move(subcommand)),
        out_opts_(out_opts),
        start_(std::chrono::steady_clock::now()) {}

  void warn(const std::string& msg) {
    warnings_.push_back(msg);
    std::cerr << "warning: " << msg << '\n';
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

  void emit(const Table& table, json parameters) {
    std::string target = "stdout";
    if (out_opts_.out.empty()) {
      write_table(table, out_opts_.as_json, std::cout);
    } else {
      std::ofstream f(out_opts_.out);
      if (!f) throw validation_error("cannot write " + out_opts_.out);
      write_table(table, out_opts_.as_json, f);
      target = out_opts_.out;
    }
    write_manifest(std::move(parameters), {target});
  }

  void write_manifest(json parameters, std::vector<std::string> outputs) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start_)
                        .count();
    json m;
    m["subcommand"] = sub_;
    m["version"] = kVersion;
    m["parameters"] = std::move(parameters);
    m["warnings"] = warnings_;
    m["outputs"] = outputs;
    m["duration_ms"] = ms;
    std::string path = out_opts_.manifest;
    if (path.empty())
      path = out_opts_.out.empty() ? "ncoadj_manifest.json"
                                   : out_opts_.out + ".manifest.json";
    std::ofstream f(path);
    if (!f) throw validation_error("cannot write " + path);
    f << m.dump(2) << '\n';
  }

 private:
  std::string sub_;
  OutputOptions out_opts_;
  std::vector<std::string> warnings_;
  std::chrono::steady_clock::time_point start_;
};

// ----- estimate -----

struct EstimateOptions {
  DataOptions data;
  OutputOptions output;
  std::string adjust;
  bool quantile_nco = false;
  std::string correction = "hc3";
  std::string estimand = "ate";
  double level = 0.95;
};

AdjustmentSpec spec_for(const std::string& token,
                        const std::vector<std::string>& covs,
                        const std::vector<std::string>& ncos,
                        bool quantile_nco) {
  AdjustmentSpec s;
  if (token == "none") return s;
  if (token == "cov") {
    s.covariate_columns = covs;
  } else if (token == "nco") {
    s.nco_columns = ncos;
    s.quantile_transform_ncos = quantile_nco;
  } else if (token == "cov+nco") {
    s.covariate_columns = covs;
    s.nco_columns = ncos;
    s.quantile_transform_ncos = quantile_nco;
  } else {
    throw validation_error("unknown --adjust token '" + token +
                           "' (none, cov, nco, cov+nco)");
  }
  if (token != "nco" && covs.empty())
    throw validation_error("--adjust " + token + " needs --covariates");
  if (token != "cov" && ncos.empty())
    throw validation_error("--adjust " + token + " needs --ncos");
  return s;
}

int run_estimate(const EstimateOptions& o) {
  Run run("estimate", o.output);
  TrialDataset d = load_dataset(o.data);
  const std::vector<std::string> covs = split_commas(o.data.covariates);
  const std::vector<std::string> ncos = split_commas(o.data.ncos);

  std::vector<std::string> tokens = split_commas(o.adjust);
  if (tokens.empty()) {
    tokens.push_back("none");
    if (!covs.empty()) tokens.push_back("cov");
    if (!ncos.empty()) tokens.push_back("nco");
    if (!covs.empty() && !ncos.empty()) tokens.push_back("cov+nco");
  } else {
    // relative efficiency is anchored to the unadjusted row, so it leads
    std::erase(tokens, "none");
    tokens.insert(tokens.begin(), "none");
  }

  const Correction corr = parse_correction(o.correction);
  const Estimand estimand = parse_estimand(o.estimand);

  Table t;
  t.columns = {"adjustment", "estimate",    "se",      "ci_low",
               "ci_high",    "variance",    "relative_efficiency",
               "p_value"};
  double base_variance = std::nan("");
  for (const std::string& token : tokens) {
    AdjustmentSpec spec = spec_for(token, covs, ncos, o.quantile_nco);
    EstimateResult r = analyze(d, spec, estimand, corr, o.level);
    if (token == "none") base_variance = r.variance;
    t.rows.push_back({Cell::str(token), Cell::num(r.estimate),
                      Cell::num(r.se), Cell::num(r.ci_low),
                      Cell::num(r.ci_high), Cell::num(r.variance),
                      Cell::num(r.variance / base_variance),
                      Cell::num(r.p_value)});
  }

  json p = echo_data_options(o.data);
  p["adjust"] = tokens;
  p["quantile_nco"] = o.quantile_nco;
  p["correction"] = o.correction;
  p["estimand"] = o.estimand;
  p["level"] = o.level;
  p["n"] = d.n();
  p["n_treated"] = d.n_treated();
  run.emit(t, std::move(p));
  return 0;
}

// ----- pretest -----

struct PretestOptions {
  DataOptions data;
  OutputOptions output;
  PlanOptions plan;
  std::string nco;  // subset to test; default all
  std::string kind = "sharp";
  std::string statistic = "diff-means";
  double alpha = 0.05;
  double epsilon = std::nan("");
  std::string epsilon_rule;
};

void fill_epsilon(const PretestOptions& o, PretestConfig& config) {
  const bool has_value = !std::isnan(o.epsilon);
  const bool has_rule = !o.epsilon_rule.empty();
  if (has_value && has_rule)
    throw validation_error("pass --epsilon or --epsilon-rule, not both");
  if (has_value) {
    config.epsilon_rule = EpsilonRule::explicit_value;
    config.epsilon = o.epsilon;
    return;
  }
  if (!has_rule)
    throw validation_error(
        "the equivalence pretest needs --epsilon or --epsilon-rule");
  const auto colon = o.epsilon_rule.find(':');
  if (colon == std::string::npos)
    throw validation_error(
        "--epsilon-rule takes sd:FRACTION or range:FRACTION (e.g. sd:0.25)");
  const std::string name = o.epsilon_rule.substr(0, colon);
  double fraction = 0.0;
  try {
    fraction = std::stod(o.epsilon_rule.substr(colon + 1));
  } catch (const std::exception&) {
    throw validation_error("bad fraction in --epsilon-rule '" +
                           o.epsilon_rule + "'");
  }
  if (name == "sd")
    config.epsilon_rule = EpsilonRule::fraction_of_sd;
  else if (name == "range")
    config.epsilon_rule = EpsilonRule::fraction_of_range;
  else
    throw validation_error("unknown --epsilon-rule '" + name +
                           "' (sd, range)");
  config.fraction = fraction;
}

int run_pretest(const PretestOptions& o) {
  Run run("pretest", o.output);
  TrialDataset d = load_dataset(o.data);
  const std::vector<std::string> covs = split_commas(o.data.covariates);
  std::vector<std::string> tested = split_commas(o.nco);
  if (tested.empty()) tested = split_commas(o.data.ncos);
  if (tested.empty())
    throw validation_error("the pretest needs NCO columns (--ncos or --nco)");

  AdjustmentSpec spec;
  spec.covariate_columns = covs;
  spec.nco_columns = tested;

  PretestConfig config;
  if (o.kind == "sharp") {
    config.kind = PretestConfig::Kind::sharp;
    if (!std::isnan(o.epsilon) || !o.epsilon_rule.empty())
      run.warn("the sharp pretest has no margin; epsilon flags are ignored");
  } else if (o.kind == "equiv") {
    config.kind = PretestConfig::Kind::equivalence;
    fill_epsilon(o, config);
  } else {
    throw validation_error("unknown --pretest '" + o.kind +
                           "' (sharp, equiv)");
  }
  config.statistic.kind = parse_statistic(o.statistic);
  if (config.statistic.kind == StatKind::robust_t)
    config.statistic.adjustment.covariate_columns = covs;
  config.plan = make_plan(o.plan);
  config.alpha = o.alpha;

  for (const std::string& name : tested) {
    const std::vector<double>* col = d.find_column(name);
    if (col == nullptr) continue;  // nco_pretests reports the bad name
    const auto [lo, hi] = std::minmax_element(col->begin(), col->end());
    if (*lo == *hi)
      run.warn("NCO '" + name +
               "' is constant: it cannot support adjustment, and its sharp "
               "pretest p-value is 1 by construction");
  }

  GateReport gate = nco_pretests(d, spec, config);
  const char* decision = gate.adjusted ? "adjusted" : "plug_in";

  Table t;
  t.columns = {"nco",     "kind",   "p",      "p_lower",
               "p_upper", "epsilon", "reject", "decision"};
  for (const auto& row : gate.tests) {
    const bool sharp = gate.kind == PretestConfig::Kind::sharp;
    t.rows.push_back(
        {Cell::str(row.column), Cell::str(sharp ? "sharp" : "equiv"),
         sharp ? Cell::num(row.p) : Cell::blank(),
         sharp ? Cell::blank() : Cell::num(row.p_lower),
         sharp ? Cell::blank() : Cell::num(row.p_upper),
         sharp ? Cell::blank() : Cell::num(row.epsilon),
         Cell::yes_no(row.reject), Cell::str(decision)});
  }

  json p = echo_data_options(o.data);
  p["nco"] = tested;
  p["pretest"] = o.kind;
  p["statistic"] = o.statistic;
  p["alpha"] = o.alpha;
  if (!std::isnan(o.epsilon)) p["epsilon"] = o.epsilon;
  if (!o.epsilon_rule.empty()) p["epsilon_rule"] = o.epsilon_rule;
  p["plan"] = echo_plan(o.plan);
  p["decision"] = decision;
  run.emit(t, std::move(p));
  return 0;
}

// ----- test -----

struct TestOptions {
  DataOptions data;
  OutputOptions output;
  PlanOptions plan;
  std::string approach = "plain";
  std::string column;  // plain only; default outcome
  std::string statistic = "diff-means";
  bool quantile_nco = false;
};

int run_test(const TestOptions& o) {
  Run run("test", o.output);
  TrialDataset d = load_dataset(o.data);
  const std::vector<std::string> covs = split_commas(o.data.covariates);
  const std::vector<std::string> ncos = split_commas(o.data.ncos);
  const PermutationPlan plan = make_plan(o.plan);

  AdjustmentSpec full;
  full.covariate_columns = covs;
  full.nco_columns = ncos;
  full.quantile_transform_ncos = o.quantile_nco;

  RandTestResult r;
  if (o.approach == "plain") {
    TestStatistic stat;
    stat.kind = parse_statistic(o.statistic);
    if (stat.kind == StatKind::robust_t)
      stat.adjustment.covariate_columns = covs;
    const std::string column = o.column.empty() ? o.data.outcome : o.column;
    r = sharp_null_test(d, column, stat, plan);
  } else if (o.approach == "pseudo") {
    r = pseudo_outcome_test(d, full, parse_statistic(o.statistic), plan);
  } else if (o.approach == "model") {
    r = model_output_test(d, full, plan);
  } else {
    throw validation_error("unknown --approach '" + o.approach +
                           "' (plain, pseudo, model)");
  }

  if (r.failures > 0)
    run.warn(std::to_string(r.failures) +
             " permuted assignment(s) failed to evaluate and were counted "
             "as extreme");

  Table t;
  t.columns = {"approach", "statistic", "p",       "t_obs",
               "mode",     "evaluated", "extreme", "failures"};
  t.rows.push_back(
      {Cell::str(o.approach),
       Cell::str(o.approach == "model" ? "robust-t" : o.statistic),
       Cell::num(r.p), Cell::num(r.t_obs),
       Cell::str(r.exhaustive ? "exhaustive" : "monte_carlo"),
       Cell::num(static_cast<double>(r.evaluated)),
       Cell::num(static_cast<double>(r.extreme)),
       Cell::num(static_cast<double>(r.failures))});

  json p = echo_data_options(o.data);
  p["approach"] = o.approach;
  p["statistic"] = o.statistic;
  if (!o.column.empty()) p["column"] = o.column;
  p["quantile_nco"] = o.quantile_nco;
  p["plan"] = echo_plan(o.plan);
  run.emit(t, std::move(p));
  return 0;
}

// ----- sensitivity -----

struct SensitivityOptions {
  DataOptions data;
  OutputOptions output;
  std::string nco;
  std::string deltas;
  std::string correction = "hc3";
  double level = 0.95;
  bool quantile_nco = false;
};

int run_sensitivity(const SensitivityOptions& o) {
  Run run("sensitivity", o.output);
  TrialDataset d = load_dataset(o.data);
  const std::vector<std::string> covs = split_commas(o.data.covariates);
  const std::vector<std::string> ncos = split_commas(o.data.ncos);

  std::string nco = o.nco;
  if (nco.empty()) {
    if (ncos.size() != 1)
      throw validation_error(
          "pick the NCO with --nco (the dataset declares " +
          std::to_string(ncos.size()) + ")");
    nco = ncos[0];
  }

  std::vector<double> deltas;
  if (o.deltas.empty()) {
    for (int i = -10; i <= 10; ++i) deltas.push_back(0.1 * i);
  } else {
    for (const std::string& s : split_commas(o.deltas)) {
      try {
        deltas.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw validation_error("bad --deltas value '" + s + "'");
      }
    }
  }

  AdjustmentSpec spec;
  spec.covariate_columns = covs;
  spec.nco_columns = {nco};
  spec.quantile_transform_ncos = o.quantile_nco;

  SensitivityCurve curve =
      sensitivity_curve(d, spec, deltas, parse_correction(o.correction),
                        o.level);

  Table t;
  t.columns = {"delta", "estimate", "ci_low", "ci_high"};
  for (const SensitivityPoint& pt : curve.points)
    t.rows.push_back({Cell::num(pt.delta), Cell::num(pt.estimate),
                      Cell::num(pt.ci_low), Cell::num(pt.ci_high)});

  json p = echo_data_options(o.data);
  p["nco"] = nco;
  p["deltas"] = deltas;
  p["correction"] = o.correction;
  p["level"] = o.level;
  p["quantile_nco"] = o.quantile_nco;
  p["gamma_hat"] = curve.gamma_hat;
  p["base_estimate"] = curve.base_estimate;
  run.emit(t, std::move(p));
  return 0;
}

// ----- simulate -----

struct SimulateOptions {
  std::string config;
  std::string out = ".";
  int threads = -1;  // -1: take the config's value
};

int run_simulate(const SimulateOptions& o) {
  OutputOptions output;
  output.manifest = (std::filesystem::path(o.out) / "manifest.json").string();
  Run run("simulate", output);

  std::ifstream f(o.config);
  if (!f) throw validation_error("cannot open config " + o.config);
  std::stringstream buf;
  buf << f.rdbuf();
  GridConfig grid = parse_grid_config(buf.str());
  if (o.threads >= 0) grid.threads = static_cast<std::size_t>(o.threads);

  std::filesystem::create_directories(o.out);

  std::vector<ScenarioSummary> results;
  results.reserve(grid.scenarios.size());
  for (std::size_t i = 0; i < grid.scenarios.size(); ++i) {
    results.push_back(run_scenario(grid.scenarios[i], grid.estimators,
                                   grid.corrections, grid.threads));
    for (const std::string& w : results.back().warnings) run.warn(w);
    std::cerr << "scenario " << (i + 1) << "/" << grid.scenarios.size()
              << " done\n";
  }

  const std::string csv_path =
      (std::filesystem::path(o.out) / "results.csv").string();
  std::ofstream csv(csv_path);
  if (!csv) throw validation_error("cannot write " + csv_path);
  write_results_csv(results, csv);

  json p;
  p["config"] = o.config;
  p["out"] = o.out;
  p["threads"] = grid.threads;
  p["scenarios"] = grid.scenarios.size();
  json seeds = json::array();
  for (const auto& s : grid.scenarios) seeds.push_back(s.seed);
  p["scenario_seeds"] = std::move(seeds);
  run.write_manifest(std::move(p), {csv_path});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Average treatment effects in randomized trials with negative "
      "control outcome adjustment"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  EstimateOptions est;
  CLI::App* c_est = app.add_subcommand(
      "estimate", "estimate the treatment effect under one or more "
                  "adjustment sets");
  add_data_options(c_est, est.data);
  c_est->add_option("--adjust", est.adjust,
                    "comma list from none,cov,nco,cov+nco (default: all "
                    "available)");
  c_est->add_flag("--quantile-nco", est.quantile_nco,
                  "quantile-transform NCOs inside the working models");
  c_est->add_option("--correction", est.correction,
                    "hc0|hc1|hc2|hc3|neyman (default hc3)");
  c_est->add_option("--estimand", est.estimand, "ate|sate (default ate)");
  c_est->add_option("--level", est.level, "confidence level (default 0.95)");
  add_output_options(c_est, est.output);

  PretestOptions pre;
  CLI::App* c_pre = app.add_subcommand(
      "pretest", "test the no-effect assumption on each NCO and report "
                 "whether adjustment is defensible");
  add_data_options(c_pre, pre.data);
  c_pre->add_option("--nco", pre.nco,
                    "subset of NCO columns to test (default: all)");
  c_pre->add_option("--pretest", pre.kind, "sharp|equiv (default sharp)");
  c_pre->add_option("--statistic", pre.statistic,
                    "diff-means|robust-t (default diff-means)");
  c_pre->add_option("--alpha", pre.alpha, "pretest level (default 0.05)");
  c_pre->add_option("--epsilon", pre.epsilon,
                    "equivalence margin (equiv only)");
  c_pre->add_option("--epsilon-rule", pre.epsilon_rule,
                    "derive the margin from the outcome: sd:F or range:F");
  add_plan_options(c_pre, pre.plan);
  add_output_options(c_pre, pre.output);

  TestOptions tst;
  CLI::App* c_tst = app.add_subcommand(
      "test", "randomization test of the no-effect null");
  add_data_options(c_tst, tst.data);
  c_tst->add_option("--approach", tst.approach,
                    "plain|pseudo|model (default plain)");
  c_tst->add_option("--column", tst.column,
                    "column tested by the plain approach (default: outcome)");
  c_tst->add_option("--statistic", tst.statistic,
                    "diff-means|robust-t (default diff-means)");
  c_tst->add_flag("--quantile-nco", tst.quantile_nco,
                  "quantile-transform NCOs inside the working models");
  add_plan_options(c_tst, tst.plan);
  add_output_options(c_tst, tst.output);

  SensitivityOptions sen;
  CLI::App* c_sen = app.add_subcommand(
      "sensitivity", "linear sensitivity curve for direct treatment effects "
                     "on the NCO");
  add_data_options(c_sen, sen.data);
  c_sen->add_option("--nco", sen.nco, "NCO column (default: the only one)");
  c_sen->add_option("--deltas", sen.deltas,
                    "comma list of direct-effect values (default "
                    "-1..1 by 0.1)");
  c_sen->add_option("--correction", sen.correction,
                    "hc0|hc1|hc2|hc3 (default hc3)");
  c_sen->add_option("--level", sen.level, "confidence level (default 0.95)");
  c_sen->add_flag("--quantile-nco", sen.quantile_nco,
                  "quantile-transform the NCO inside the working models");
  add_output_options(c_sen, sen.output);

  SimulateOptions sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "run a scenario grid from a JSON config");
  c_sim->add_option("--config", sim.config, "grid config JSON")->required();
  c_sim->add_option("--out", sim.out, "output directory (default .)");
  c_sim->add_option("--threads", sim.threads,
                    "worker threads (0 = hardware; default: config value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(c_est)) return run_estimate(est);
    if (app.got_subcommand(c_pre)) return run_pretest(pre);
    if (app.got_subcommand(c_tst)) return run_test(tst);
    if (app.got_subcommand(c_sen)) return run_sensitivity(sen);
    return run_simulate(sim);
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
