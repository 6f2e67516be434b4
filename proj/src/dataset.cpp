#include "ncoadj/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "ncoadj/errors.hpp"

namespace ncoadj {

std::optional<std::size_t> ColumnSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

void ColumnSet::add(std::string name, std::vector<double> column) {
  names.push_back(std::move(name));
  values.push_back(std::move(column));
}

std::size_t TrialDataset::n_treated() const {
  std::size_t k = 0;
  for (int a : treatment) k += (a != 0);
  return k;
}

double TrialDataset::pi_hat() const {
  return static_cast<double>(n_treated()) / static_cast<double>(n());
}

const std::vector<double>* TrialDataset::find_column(
    const std::string& name) const {
  if (auto i = covariates.index_of(name)) return &covariates.values[*i];
  if (auto i = ncos.index_of(name)) return &ncos.values[*i];
  if (name == outcome_name) return &outcome;
  return nullptr;
}

void TrialDataset::validate() const {
  const std::size_t m = n();
  if (m < 4) throw validation_error("dataset has " + std::to_string(m) +
                                    " units; at least 4 required");
  if (outcome.size() != m)
    throw validation_error("outcome length " + std::to_string(outcome.size()) +
                           " does not match " + std::to_string(m) + " units");
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (treatment[i] != 0 && treatment[i] != 1)
      throw validation_error("treatment value " +
                             std::to_string(treatment[i]) + " at unit " +
                             std::to_string(i + 1) + " is not 0/1");
    n1 += static_cast<std::size_t>(treatment[i]);
    if (!std::isfinite(outcome[i]))
      throw validation_error("non-finite outcome at unit " +
                             std::to_string(i + 1));
  }
  if (n1 == 0 || n1 == m)
    throw validation_error("every unit is in the same arm (treated count " +
                           std::to_string(n1) + " of " + std::to_string(m) +
                           ")");
  if (!(design_pi > 0.0 && design_pi < 1.0))
    throw validation_error("design_pi must lie strictly inside (0, 1)");

  std::set<std::string> seen{treatment_name, outcome_name};
  if (seen.size() != 2)
    throw validation_error("treatment and outcome share the name '" +
                           treatment_name + "'");
  auto check_set = [&](const ColumnSet& cs, const char* role) {
    if (cs.names.size() != cs.values.size())
      throw validation_error(std::string(role) + " name/value count mismatch");
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (!seen.insert(cs.names[j]).second)
        throw validation_error("duplicate column name '" + cs.names[j] + "'");
      if (cs.values[j].size() != m)
        throw validation_error("column '" + cs.names[j] + "' has " +
                               std::to_string(cs.values[j].size()) +
                               " values for " + std::to_string(m) + " units");
      for (std::size_t i = 0; i < m; ++i)
        if (!std::isfinite(cs.values[j][i]))
          throw validation_error("non-finite value in column '" + cs.names[j] +
                                 "' at unit " + std::to_string(i + 1));
    }
  };
  check_set(covariates, "covariate");
  check_set(ncos, "NCO");
}

namespace {

// Split one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line,
                                        const std::string& where) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted)
    throw validation_error(where + ": unterminated quoted field");
  out.push_back(field);
  return out;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, const std::string& where,
                    const std::string& column) {
  std::string s = trimmed(raw);
  if (s.empty())
    throw validation_error(where + ": missing value in column '" + column +
                           "'");
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size())
    throw validation_error(where + ": cannot parse '" + s + "' in column '" +
                           column + "' as a number");
  if (!std::isfinite(v))
    throw validation_error(where + ": non-finite value in column '" + column +
                           "'");
  return v;
}

}  // namespace

TrialDataset load_csv(std::istream& in, const CsvSchema& schema,
                      double design_pi, const std::string& origin) {
  if (schema.treatment.empty() || schema.outcome.empty())
    throw validation_error("schema must name the treatment and outcome columns");

  std::string line;
  if (!std::getline(in, line))
    throw validation_error(origin + ": empty input, header row required");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line, origin + ":1");
  for (auto& h : header) h = trimmed(h);

  auto column_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw validation_error(origin + ": column '" + name +
                             "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t treat_ix = column_index(schema.treatment);
  const std::size_t outcome_ix = column_index(schema.outcome);
  std::vector<std::size_t> cov_ix, nco_ix;
  for (const auto& c : schema.covariates) cov_ix.push_back(column_index(c));
  for (const auto& c : schema.ncos) nco_ix.push_back(column_index(c));

  TrialDataset data;
  data.design_pi = design_pi;
  data.treatment_name = schema.treatment;
  data.outcome_name = schema.outcome;
  for (const auto& c : schema.covariates) data.covariates.add(c, {});
  for (const auto& c : schema.ncos) data.ncos.add(c, {});

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trimmed(line).empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::vector<std::string> fields = split_csv_line(line, where);
    if (fields.size() != header.size())
      throw validation_error(where + ": " + std::to_string(fields.size()) +
                             " fields, header has " +
                             std::to_string(header.size()));

    double a = parse_number(fields[treat_ix], where, schema.treatment);
    if (a != 0.0 && a != 1.0)
      throw validation_error(where + ": non-binary treatment value '" +
                             trimmed(fields[treat_ix]) + "' in column '" +
                             schema.treatment + "'");
    data.treatment.push_back(static_cast<int>(a));
    data.outcome.push_back(
        parse_number(fields[outcome_ix], where, schema.outcome));
    for (std::size_t j = 0; j < cov_ix.size(); ++j)
      data.covariates.values[j].push_back(
          parse_number(fields[cov_ix[j]], where, schema.covariates[j]));
    for (std::size_t j = 0; j < nco_ix.size(); ++j)
      data.ncos.values[j].push_back(
          parse_number(fields[nco_ix[j]], where, schema.ncos[j]));
  }

  data.validate();
  return data;
}

TrialDataset load_csv(const std::string& path, const CsvSchema& schema,
                      double design_pi) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open '" + path + "'");
  return load_csv(in, schema, design_pi, path);
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void emit_csv(const TrialDataset& data, std::ostream& out) {
  out << data.treatment_name;
  for (const auto& c : data.covariates.names) out << ',' << c;
  for (const auto& c : data.ncos.names) out << ',' << c;
  out << ',' << data.outcome_name << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << data.treatment[i];
    for (const auto& col : data.covariates.values)
      out << ',' << format_double(col[i]);
    for (const auto& col : data.ncos.values)
      out << ',' << format_double(col[i]);
    out << ',' << format_double(data.outcome[i]) << '\n';
  }
}

void emit_csv(const TrialDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write '" + path + "'");
  emit_csv(data, out);
  if (!out.good()) throw validation_error("write to '" + path + "' failed");
}

std::vector<double> empirical_quantiles(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // midrank of the tie block [i, j], 1-based
    double midrank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 +
                     1.0;
    double q = midrank / static_cast<double>(n);
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = q;
    i = j + 1;
  }
  return out;
}

TrialDataset apply_transform(const TrialDataset& data, const Transform& t) {
  TrialDataset out = data;
  std::vector<double>* col = nullptr;
  if (auto i = out.covariates.index_of(t.column))
    col = &out.covariates.values[*i];
  else if (auto i = out.ncos.index_of(t.column))
    col = &out.ncos.values[*i];
  else if (t.column == out.outcome_name)
    col = &out.outcome;
  else
    throw validation_error("transform target '" + t.column +
                           "' is not a column of the dataset");

  switch (t.kind) {
    case Transform::Kind::identity:
      break;
    case Transform::Kind::log10_offset: {
      for (std::size_t i = 0; i < col->size(); ++i) {
        double shifted = (*col)[i] + t.offset;
        if (!(shifted > 0.0))
          throw validation_error(
              "log10 transform of column '" + t.column + "': value " +
              format_double((*col)[i]) + " at unit " + std::to_string(i + 1) +
              " is not positive after offset " + format_double(t.offset));
        (*col)[i] = std::log10(shifted);
      }
      break;
    }
    case Transform::Kind::empirical_quantile: {
      *col = empirical_quantiles(*col);
      break;
    }
  }
  return out;
}

}  // namespace ncoadj
