#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ncoadj {

// Named numeric columns of equal length.
struct ColumnSet {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;

  std::size_t size() const { return names.size(); }
  bool empty() const { return names.empty(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  void add(std::string name, std::vector<double> column);
};

// One randomized trial: binary treatment, primary outcome, and named
// baseline-role columns split into covariates (pre-treatment) and negative
// control outcomes (post-treatment, assumed unaffected).
struct TrialDataset {
  std::vector<int> treatment;  // 0/1 per unit
  std::vector<double> outcome;
  ColumnSet covariates;
  ColumnSet ncos;
  double design_pi = 0.5;  // assignment probability from the design
  std::string treatment_name = "A";
  std::string outcome_name = "Y";

  std::size_t n() const { return treatment.size(); }
  std::size_t n_treated() const;
  std::size_t n_control() const { return n() - n_treated(); }
  double pi_hat() const;  // empirical treated fraction, n1/n

  // Resolve a named column among covariates, then NCOs, then the outcome.
  const std::vector<double>* find_column(const std::string& name) const;

  // Throws validation_error on: n < 4, an empty arm, non-binary treatment,
  // non-finite values, length mismatch, duplicate column names, or
  // design_pi outside (0, 1).
  void validate() const;
};

struct CsvSchema {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> covariates;
  std::vector<std::string> ncos;
};

// Parse a CSV (header row required; columns not named in the schema are
// ignored). Throws validation_error with file:line context on malformed
// input, and runs TrialDataset::validate() on the result.
TrialDataset load_csv(std::istream& in, const CsvSchema& schema,
                      double design_pi, const std::string& origin = "<csv>");
TrialDataset load_csv(const std::string& path, const CsvSchema& schema,
                      double design_pi);

// Write treatment, covariates, NCOs, outcome with full double precision;
// load_csv(emit_csv(d)) round-trips exactly.
void emit_csv(const TrialDataset& data, std::ostream& out);
void emit_csv(const TrialDataset& data, const std::string& path);

struct Transform {
  enum class Kind { identity, log10_offset, empirical_quantile };
  Kind kind = Kind::identity;
  std::string column;
  double offset = 0.0;  // log10_offset only
};

// Return a copy with the named column replaced. log10_offset maps v to
// log10(v + offset) and requires min(v) + offset > 0. empirical_quantile
// maps each value to midrank/n, pooled across arms.
TrialDataset apply_transform(const TrialDataset& data, const Transform& t);

// Midrank/n quantile transform used by apply_transform and by the
// quantile-NCO estimators; ties share their average rank.
std::vector<double> empirical_quantiles(std::span<const double> values);

}  // namespace ncoadj
