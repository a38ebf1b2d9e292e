// Longitudinal panel data: the observed process (L_0, A_0, ..., L_tau, A_tau, Y)
// with optional censoring and survival structure.
//
// Canonical layout is wide (one row per unit). Long-format files are pivoted
// at load. Cells that are unavailable (after censoring) are NaN in memory and
// empty fields on disk. Datasets are immutable after load; the only "mutation"
// is with_exposure_replaced, which returns a copy.
#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lmtp/common.hpp"

namespace lmtp {

enum class ExposureKind { Binary, Categorical, Continuous };

inline std::string exposure_kind_name(ExposureKind k) {
  switch (k) {
    case ExposureKind::Binary: return "binary";
    case ExposureKind::Categorical: return "categorical";
    case ExposureKind::Continuous: return "continuous";
  }
  return "?";
}

inline ExposureKind parse_exposure_kind(const std::string& s) {
  if (s == "binary") return ExposureKind::Binary;
  if (s == "categorical") return ExposureKind::Categorical;
  if (s == "continuous") return ExposureKind::Continuous;
  throw config_error("unknown exposure kind: " + s);
}

// Column-role mapping for a wide file. Covariates are listed per time point;
// exposure/censoring/outcome columns are listed in time order.
struct PanelSchema {
  std::string unit_column;                                // optional, "" = row order
  std::vector<std::vector<std::string>> covariates;       // [t][j]
  std::vector<std::string> exposures;                     // [t]
  ExposureKind exposure_kind = ExposureKind::Binary;
  std::vector<double> exposure_levels;                    // categorical only
  std::vector<std::string> censoring;                     // [t] or empty
  std::string outcome;                                    // terminal outcome, or
  std::vector<std::string> survival_outcomes;             // per-time event indicators
};

struct ValidationReport {
  std::vector<std::string> notes;  // e.g. LOCF imputations performed at load
};

struct HistoryView {
  int unit = 0;
  int time = 0;
  std::vector<std::string> names;   // (L_0..., A_0, L_1..., ..., L_t...)
  std::vector<double> values;
};

class PanelDataset {
public:
  PanelDataset() = default;

  int n_units() const { return n_; }
  int horizon() const { return horizon_; }  // tau; time points are 0..tau
  bool has_censoring() const { return !schema_.censoring.empty(); }
  bool is_survival() const { return !schema_.survival_outcomes.empty(); }
  const PanelSchema& schema() const { return schema_; }
  ExposureKind exposure_kind() const { return schema_.exposure_kind; }
  double outcome_min() const { return outcome_min_; }
  double outcome_max() const { return outcome_max_; }
  const ValidationReport& validation() const { return report_; }
  const std::vector<std::string>& unit_ids() const { return unit_ids_; }

  const std::vector<double>& column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) throw data_error("no such column: " + name);
    return it->second;
  }
  bool has_column(const std::string& name) const { return columns_.count(name) > 0; }
  std::vector<std::string> column_names() const { return column_order_; }

  double exposure(int unit, int t) const { return column(schema_.exposures.at(t))[unit]; }

  // C_t = 1 means the unit is observed at t+1. observed_through(u, t): data at
  // time t (L_t, A_t) is available, i.e. C_s = 1 for all s < t.
  bool observed_through(int unit, int t) const {
    if (!has_censoring()) return true;
    for (int s = 0; s < t && s <= horizon_; ++s) {
      const double c = column(schema_.censoring[s])[unit];
      if (is_missing(c) || c == 0.0) return false;
    }
    return true;
  }

  // Event status at the end of interval t for survival outcomes (Y_{-1} = 0).
  bool event_by(int unit, int t) const {
    if (!is_survival() || t < 0) return false;
    const int tt = std::min<int>(t, static_cast<int>(schema_.survival_outcomes.size()) - 1);
    const double y = column(schema_.survival_outcomes[tt])[unit];
    return !is_missing(y) && y == 1.0;
  }

  // Terminal outcome for a target horizon: Y for non-survival data (horizon
  // must be tau+1), Y_{h-1} for survival data.
  double outcome_at_horizon(int unit, int h) const {
    if (is_survival()) {
      if (h < 1 || h > static_cast<int>(schema_.survival_outcomes.size()))
        throw data_error("horizon out of range");
      return column(schema_.survival_outcomes[h - 1])[unit];
    }
    return column(schema_.outcome)[unit];
  }

  // Ordered history H_t = (L_0, A_0, ..., A_{t-1}, L_t). Column names of the
  // history, in time order; shared across units.
  std::vector<std::string> history_columns(int t) const {
    std::vector<std::string> out;
    for (int s = 0; s <= t; ++s) {
      for (const auto& c : schema_.covariates[s]) out.push_back(c);
      if (s < t) out.push_back(schema_.exposures[s]);
    }
    return out;
  }

  HistoryView history_at(int unit, int t) const {
    if (t < 0 || t > horizon_) throw data_error("history_at: time out of range");
    if (!observed_through(unit, t))
      throw data_error("history_at: unit " + unit_ids_[unit] + " censored before time " +
                       std::to_string(t));
    HistoryView h;
    h.unit = unit;
    h.time = t;
    h.names = history_columns(t);
    h.values.reserve(h.names.size());
    for (const auto& c : h.names) h.values.push_back(column(c)[unit]);
    return h;
  }

  PanelDataset with_exposure_replaced(int t, const std::vector<double>& values) const {
    if (t < 0 || t > horizon_) throw data_error("with_exposure_replaced: bad time");
    if (static_cast<int>(values.size()) != n_)
      throw data_error("with_exposure_replaced: wrong value count");
    for (double v : values) {
      if (is_missing(v)) continue;
      check_exposure_value(v);
    }
    PanelDataset out = *this;
    out.columns_[schema_.exposures[t]] = values;
    return out;
  }

  void check_exposure_value(double v) const {
    switch (schema_.exposure_kind) {
      case ExposureKind::Binary:
        if (v != 0.0 && v != 1.0) throw data_error("binary exposure value must be 0/1");
        break;
      case ExposureKind::Categorical: {
        const auto& lv = schema_.exposure_levels;
        if (std::find(lv.begin(), lv.end(), v) == lv.end())
          throw data_error("categorical exposure value not in declared levels");
        break;
      }
      case ExposureKind::Continuous:
        if (!std::isfinite(v)) throw data_error("continuous exposure must be finite");
        break;
    }
  }

  bool logically_equal(const PanelDataset& other) const {
    if (n_ != other.n_ || horizon_ != other.horizon_) return false;
    if (column_order_ != other.column_order_) return false;
    for (const auto& name : column_order_) {
      const auto& a = column(name);
      const auto& b = other.column(name);
      for (int i = 0; i < n_; ++i) {
        if (is_missing(a[i]) != is_missing(b[i])) return false;
        if (!is_missing(a[i]) && a[i] != b[i]) return false;
      }
    }
    return true;
  }

  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << "unit";
    for (const auto& c : column_order_) out << "," << c;
    out << "\n";
    out.precision(17);
    for (int i = 0; i < n_; ++i) {
      out << unit_ids_[i];
      for (const auto& c : column_order_) {
        out << ",";
        const double v = column(c)[i];
        if (!is_missing(v)) out << v;
      }
      out << "\n";
    }
  }

  // Direct in-memory construction (simulation, tests).
  static PanelDataset from_columns(const PanelSchema& schema,
                                   std::vector<std::string> unit_ids,
                                   std::map<std::string, std::vector<double>> columns) {
    PanelDataset d;
    d.schema_ = schema;
    d.unit_ids_ = std::move(unit_ids);
    d.n_ = static_cast<int>(d.unit_ids_.size());
    d.horizon_ = static_cast<int>(schema.exposures.size()) - 1;
    d.columns_ = std::move(columns);
    // stable, time-grouped order for serialization
    for (int t = 0; t <= d.horizon_; ++t) {
      for (const auto& c : schema.covariates.at(t)) d.column_order_.push_back(c);
      d.column_order_.push_back(schema.exposures[t]);
      if (!schema.censoring.empty()) d.column_order_.push_back(schema.censoring[t]);
      if (!schema.survival_outcomes.empty())
        d.column_order_.push_back(schema.survival_outcomes[t]);
    }
    if (!schema.outcome.empty()) d.column_order_.push_back(schema.outcome);
    d.validate();
    return d;
  }

  static PanelDataset load_csv(const std::string& path, const PanelSchema& schema);

private:
  void validate();

  int n_ = 0;
  int horizon_ = -1;
  PanelSchema schema_;
  std::vector<std::string> unit_ids_;
  std::vector<std::string> column_order_;
  std::map<std::string, std::vector<double>> columns_;
  double outcome_min_ = 0.0;
  double outcome_max_ = 1.0;
  ValidationReport report_;
};

inline void PanelDataset::validate() {
  if (horizon_ < 0) throw data_error("schema declares no exposure columns");
  if (static_cast<int>(schema_.covariates.size()) != horizon_ + 1)
    throw data_error("covariate lists must cover every time point");
  if (!schema_.censoring.empty() &&
      static_cast<int>(schema_.censoring.size()) != horizon_ + 1)
    throw data_error("censoring columns must cover every time point");
  if (schema_.outcome.empty() && schema_.survival_outcomes.empty())
    throw data_error("schema declares no outcome");
  if (!schema_.outcome.empty() && !schema_.survival_outcomes.empty())
    throw data_error("schema declares both terminal and survival outcomes");
  if (is_survival() &&
      static_cast<int>(schema_.survival_outcomes.size()) != horizon_ + 1)
    throw data_error("survival outcome columns must cover every time point");

  for (const auto& name : column_order_) {
    auto it = columns_.find(name);
    if (it == columns_.end()) throw data_error("schema names missing column: " + name);
    if (static_cast<int>(it->second.size()) != n_)
      throw data_error("column length mismatch: " + name);
  }

  // censoring monotone; availability consistent with censoring
  for (int i = 0; i < n_; ++i) {
    int censored_at = horizon_ + 1;  // first t with C_t = 0
    if (has_censoring()) {
      bool dead = false;
      for (int t = 0; t <= horizon_; ++t) {
        const double c = column(schema_.censoring[t])[i];
        if (dead) {
          if (!is_missing(c) && c == 1.0)
            throw data_error("non-monotone censoring for unit " + unit_ids_[i] +
                             " at time " + std::to_string(t));
        } else if (!is_missing(c) && c == 0.0) {
          dead = true;
          censored_at = t;
        }
      }
    }
    // time-t columns are observed iff t <= censored_at; required before,
    // forbidden after
    for (int t = 0; t <= horizon_; ++t) {
      const double a = column(schema_.exposures[t])[i];
      if (t > censored_at && !is_missing(a))
        throw data_error("unit " + unit_ids_[i] + " has exposure at time " +
                         std::to_string(t) + " after censoring at " +
                         std::to_string(censored_at));
      if (t <= censored_at && is_missing(a))
        throw data_error("unit " + unit_ids_[i] + " missing exposure at time " +
                         std::to_string(t));
      if (!is_missing(a)) check_exposure_value(a);
    }
  }

  // LOCF + missingness indicator for covariate gaps before censoring.
  // Pairing across time is positional within the per-time covariate lists.
  const std::size_t width = schema_.covariates[0].size();
  bool uniform_width = true;
  for (const auto& lst : schema_.covariates)
    if (lst.size() != width) uniform_width = false;
  for (int t = 0; t <= horizon_; ++t) {
    // indicators appended below must not extend this scan
    const std::size_t n_cov_t = schema_.covariates[t].size();
    for (std::size_t j = 0; j < n_cov_t; ++j) {
      const std::string name = schema_.covariates[t][j];  // list may reallocate
      auto& col = columns_[name];
      for (int i = 0; i < n_; ++i) {
        if (!is_missing(col[i])) continue;
        if (!observed_through(i, t)) continue;  // legitimately unavailable
        if (t == 0 || !uniform_width)
          throw data_error("unit " + unit_ids_[i] + " missing covariate " + name +
                           " with no earlier value to carry forward");
        const std::string& prev = schema_.covariates[t - 1][j];
        const double pv = columns_[prev][i];
        if (is_missing(pv))
          throw data_error("unit " + unit_ids_[i] + " missing covariate " + name +
                           " and its predecessor " + prev);
        col[i] = pv;
        const std::string ind = name + "_miss";
        if (!columns_.count(ind)) {
          columns_[ind] = std::vector<double>(n_, 0.0);
          schema_.covariates[t].push_back(ind);
          column_order_.push_back(ind);
          report_.notes.push_back("added missingness indicator " + ind);
        }
        columns_[ind][i] = 1.0;
        report_.notes.push_back("LOCF: unit " + unit_ids_[i] + " column " + name);
      }
    }
  }

  // survival outcomes monotone (event carried forward)
  if (is_survival()) {
    for (int i = 0; i < n_; ++i) {
      bool event = false;
      for (int t = 0; t <= horizon_; ++t) {
        const double y = column(schema_.survival_outcomes[t])[i];
        if (is_missing(y)) continue;
        if (y != 0.0 && y != 1.0) throw data_error("survival outcome must be 0/1");
        if (event && y == 0.0)
          throw data_error("non-monotone survival outcome for unit " + unit_ids_[i] +
                           " at time " + std::to_string(t));
        if (y == 1.0) event = true;
      }
    }
    outcome_min_ = 0.0;
    outcome_max_ = 1.0;
  } else {
    const auto& y = column(schema_.outcome);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_; ++i) {
      if (is_missing(y[i])) continue;
      lo = std::min(lo, y[i]);
      hi = std::max(hi, y[i]);
    }
    if (!std::isfinite(lo)) throw data_error("outcome column has no observed values");
    outcome_min_ = lo;
    outcome_max_ = hi;
  }
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace detail

inline PanelDataset PanelDataset::load_csv(const std::string& path,
                                           const PanelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty file: " + path);
  const auto header = detail::split_csv_line(line);
  std::map<std::string, int> col_index;
  for (std::size_t j = 0; j < header.size(); ++j) col_index[header[j]] = static_cast<int>(j);

  auto require = [&](const std::string& name) {
    if (!col_index.count(name)) throw data_error("schema names column '" + name +
                                                 "' absent from file header");
  };
  for (const auto& lst : schema.covariates)
    for (const auto& c : lst) require(c);
  for (const auto& c : schema.exposures) require(c);
  for (const auto& c : schema.censoring) require(c);
  for (const auto& c : schema.survival_outcomes) require(c);
  if (!schema.outcome.empty()) require(schema.outcome);

  std::vector<std::string> unit_ids;
  std::map<std::string, std::vector<double>> columns;
  std::vector<std::string> needed;
  for (const auto& lst : schema.covariates)
    for (const auto& c : lst) needed.push_back(c);
  for (const auto& c : schema.exposures) needed.push_back(c);
  for (const auto& c : schema.censoring) needed.push_back(c);
  for (const auto& c : schema.survival_outcomes) needed.push_back(c);
  if (!schema.outcome.empty()) needed.push_back(schema.outcome);
  for (const auto& c : needed) columns[c] = {};

  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw data_error("row " + std::to_string(row_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    if (!schema.unit_column.empty()) {
      require(schema.unit_column);
      unit_ids.push_back(fields[col_index[schema.unit_column]]);
    } else {
      unit_ids.push_back(std::to_string(row_no - 1));
    }
    for (const auto& c : needed) {
      const std::string& f = fields[col_index[c]];
      if (f.empty()) {
        columns[c].push_back(kNaN);
      } else {
        try {
          std::size_t pos = 0;
          const double v = std::stod(f, &pos);
          if (pos != f.size()) throw std::invalid_argument(f);
          columns[c].push_back(v);
        } catch (const std::exception&) {
          throw data_error("row " + std::to_string(row_no) + ": cannot parse '" + f +
                           "' in column " + c);
        }
      }
    }
  }
  return from_columns(schema, std::move(unit_ids), std::move(columns));
}

}  // namespace lmtp
