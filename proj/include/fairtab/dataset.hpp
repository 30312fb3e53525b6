#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fairtab/csv.hpp"
#include "fairtab/schema.hpp"
#include "fairtab/tensor.hpp"

namespace fairtab {

/// True for a valid calendar date written as YYYY-MM-DD.
inline bool is_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (text[i] < '0' || text[i] > '9') return false;
  const int y = std::stoi(std::string(text.substr(0, 4)));
  const unsigned m = std::stoul(std::string(text.substr(5, 2)));
  const unsigned d = std::stoul(std::string(text.substr(8, 2)));
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

struct RawColumn {
  std::vector<double> numeric;  // numeric columns; NaN marks a value to impute
  std::vector<int> codes;       // categorical columns: index into the vocabulary
};

/// Validated, typed table. The schema is resolved: inferred vocabularies are
/// filled in and policy categories appended.
struct RawDataset {
  Schema schema;
  std::vector<RawColumn> columns;         // aligned with schema.columns
  std::vector<int> labels;                // 0/1
  std::vector<std::string> days;          // ISO date per row
  std::vector<std::vector<int>> sensitive;  // [sensitive column][row], 1 = deprived
  std::vector<int> sensitive_class;       // product class in [0, 2^m)

  std::size_t rows() const { return labels.size(); }

  std::vector<std::string> sensitive_names() const {
    std::vector<std::string> out;
    for (std::size_t c : schema.sensitive_columns()) out.push_back(schema.columns[c].name);
    return out;
  }
  std::size_t sensitive_class_count() const { return std::size_t{1} << schema.sensitive_columns().size(); }
};

/// Product class of the sensitive bits: bit k (MSB first) is 1 - S_k, so the
/// all-deprived combination is class 0 and the all-privileged one is the last.
inline int product_class(std::span<const int> bits) {
  int cls = 0;
  for (int s : bits) cls = cls * 2 + (1 - s);
  return cls;
}

/// Resolves vocabularies and policy categories against the data.
inline Schema resolve_schema(const Schema& schema, const CsvTable& table,
                             const std::vector<std::size_t>& source_index) {
  Schema out = schema;
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    ColumnSpec& col = out.columns[c];
    if (col.kind != ColumnKind::kCategorical || col.role == ColumnRole::kDayKey) continue;
    if (col.vocabulary.empty()) {
      std::set<std::string> seen;
      for (const auto& row : table.rows) {
        const std::string v(trim(row[source_index[c]]));
        if (!v.empty()) seen.insert(v);
      }
      col.vocabulary.assign(seen.begin(), seen.end());
      for (const auto& p : col.privileged)
        if (col.category_index(p) < 0 && !table.rows.empty()) {
          fail(ErrorKind::kIngestion, "column '" + col.name + "': privileged value '" + p + "' never occurs");
        }
    }
    if (col.role == ColumnRole::kSensitive) continue;
    if (out.missing == MissingPolicy::kImpute && col.category_index(kMissingCategory) < 0) {
      col.vocabulary.push_back(kMissingCategory);
    }
    if (out.unknown == UnknownPolicy::kMap && col.category_index(kUnknownCategory) < 0) {
      col.vocabulary.push_back(kUnknownCategory);
    }
  }
  return out;
}

inline RawDataset load_dataset(const CsvTable& table, const Schema& schema, const std::string& source) {
  schema.validate();
  std::vector<std::size_t> source_index;
  for (const auto& col : schema.columns) {
    auto it = std::find(table.header.begin(), table.header.end(), col.name);
    if (it == table.header.end()) fail(ErrorKind::kIngestion, source + ": missing column '" + col.name + "'");
    source_index.push_back(static_cast<std::size_t>(it - table.header.begin()));
  }
  if (table.rows.empty()) fail(ErrorKind::kIngestion, source + ": no data rows");

  RawDataset data;
  data.schema = resolve_schema(schema, table, source_index);
  const Schema& s = data.schema;
  const std::size_t n = table.rows.size();
  data.columns.resize(s.columns.size());
  const auto sensitive_cols = s.sensitive_columns();
  data.sensitive.assign(sensitive_cols.size(), std::vector<int>(n));
  data.labels.resize(n);
  data.days.resize(n);
  data.sensitive_class.resize(n);

  for (std::size_t c = 0; c < s.columns.size(); ++c) {
    const ColumnSpec& col = s.columns[c];
    RawColumn& raw = data.columns[c];
    if (col.kind == ColumnKind::kNumeric) raw.numeric.resize(n);
    else raw.codes.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::string value(trim(table.rows[r][source_index[c]]));
      auto bad = [&](const std::string& what) {
        fail(ErrorKind::kIngestion, source + ": row " + std::to_string(r + 1) + " (line " +
                                        std::to_string(r + 2) + "), column '" + col.name + "': " + what);
      };
      const bool strict = col.role != ColumnRole::kFeature;
      if (value.empty() && (strict || s.missing == MissingPolicy::kReject)) bad("missing value");

      if (col.role == ColumnRole::kDayKey) {
        if (!is_iso_date(value)) bad("'" + value + "' is not an ISO date (YYYY-MM-DD)");
        data.days[r] = value;
      } else if (col.kind == ColumnKind::kNumeric) {
        double x = std::nan("");
        if (!value.empty()) {
          char* end = nullptr;
          x = std::strtod(value.c_str(), &end);
          if (end != value.c_str() + value.size() || !std::isfinite(x)) bad("'" + value + "' is not a finite number");
        }
        raw.numeric[r] = x;
        if (col.role == ColumnRole::kLabel) {
          if (x != 0.0 && x != 1.0) bad("label must be 0 or 1, got '" + value + "'");
          data.labels[r] = static_cast<int>(x);
        }
      } else {
        int code = value.empty() ? col.category_index(kMissingCategory) : col.category_index(value);
        if (code < 0) {
          if (strict || s.unknown == UnknownPolicy::kReject) bad("unknown category '" + value + "'");
          code = col.category_index(kUnknownCategory);
        }
        raw.codes[r] = code;
      }
    }
  }
  for (std::size_t k = 0; k < sensitive_cols.size(); ++k) {
    const ColumnSpec& col = s.columns[sensitive_cols[k]];
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& v = col.vocabulary[data.columns[sensitive_cols[k]].codes[r]];
      data.sensitive[k][r] = std::find(col.privileged.begin(), col.privileged.end(), v) == col.privileged.end();
    }
  }
  std::vector<int> bits(sensitive_cols.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < bits.size(); ++k) bits[k] = data.sensitive[k][r];
    data.sensitive_class[r] = product_class(bits);
  }
  return data;
}

inline RawDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  return load_dataset(read_csv_file(path), schema, path.string());
}

/// Writes the schema columns back as CSV; missing values become empty fields.
inline std::string to_csv(const RawDataset& data) {
  std::ostringstream out;
  std::vector<std::string> fields;
  for (const auto& col : data.schema.columns) fields.push_back(col.name);
  write_csv_row(out, fields);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    fields.clear();
    for (std::size_t c = 0; c < data.schema.columns.size(); ++c) {
      const ColumnSpec& col = data.schema.columns[c];
      if (col.role == ColumnRole::kDayKey) {
        fields.push_back(data.days[r]);
      } else if (col.kind == ColumnKind::kNumeric) {
        const double x = data.columns[c].numeric[r];
        fields.push_back(std::isnan(x) ? "" : format_double(x));
      } else {
        const std::string& v = col.vocabulary[data.columns[c].codes[r]];
        fields.push_back(v == kMissingCategory ? "" : v);
      }
    }
    write_csv_row(out, fields);
  }
  return out.str();
}

/// Maps raw rows to the model's feature matrix: numeric columns standardized
/// with statistics from the fitting rows, categoricals one-hot.
class FeatureEncoder {
 public:
  struct NumericStats {
    double mean = 0.0;
    double scale = 1.0;
  };

  FeatureEncoder() = default;

  static FeatureEncoder fit(const RawDataset& data, std::span<const std::size_t> rows) {
    FeatureEncoder enc;
    enc.schema_ = data.schema;
    enc.stats_.resize(data.schema.columns.size());
    for (std::size_t c = 0; c < data.schema.columns.size(); ++c) {
      const ColumnSpec& col = data.schema.columns[c];
      if (!col.is_feature(data.schema.drop_sensitive_features) || col.kind != ColumnKind::kNumeric) continue;
      double sum = 0.0, count = 0.0;
      for (std::size_t r : rows) {
        const double x = data.columns[c].numeric[r];
        if (!std::isnan(x)) {
          sum += x;
          count += 1.0;
        }
      }
      const double mean = count > 0 ? sum / count : 0.0;
      double ss = 0.0;
      for (std::size_t r : rows) {
        const double x = data.columns[c].numeric[r];
        if (!std::isnan(x)) ss += (x - mean) * (x - mean);
      }
      const double sd = count > 0 ? std::sqrt(ss / count) : 0.0;
      enc.stats_[c] = {mean, sd > 0.0 ? sd : 1.0};
    }
    enc.build_names();
    return enc;
  }

  /// Rebuilds an encoder from stored state (schema and per-column stats).
  static FeatureEncoder from_state(const Schema& schema, std::vector<NumericStats> stats) {
    if (stats.size() != schema.columns.size()) fail(ErrorKind::kState, "encoder stats do not match schema");
    FeatureEncoder enc;
    enc.schema_ = schema;
    enc.stats_ = std::move(stats);
    enc.build_names();
    return enc;
  }

  Tensor transform(const RawDataset& data, std::span<const std::size_t> rows) const {
    check_compatible(data.schema);
    const std::size_t width = names_.size();
    std::vector<double> out(rows.size() * width, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double* dst = out.data() + i * width;
      std::size_t offset = 0;
      for (std::size_t c = 0; c < schema_.columns.size(); ++c) {
        const ColumnSpec& col = schema_.columns[c];
        if (!col.is_feature(schema_.drop_sensitive_features)) continue;
        if (col.kind == ColumnKind::kNumeric) {
          const double x = data.columns[c].numeric[rows[i]];
          dst[offset++] = std::isnan(x) ? 0.0 : (x - stats_[c].mean) / stats_[c].scale;
        } else {
          dst[offset + static_cast<std::size_t>(data.columns[c].codes[rows[i]])] = 1.0;
          offset += col.vocabulary.size();
        }
      }
    }
    return Tensor(rows.size(), width, std::move(out));
  }

  std::size_t width() const { return names_.size(); }
  const std::vector<std::string>& feature_names() const { return names_; }
  const Schema& schema() const { return schema_; }
  const std::vector<NumericStats>& stats() const { return stats_; }

  /// Feature-matrix column range produced by schema column c.
  std::pair<std::size_t, std::size_t> span_of(std::size_t c) const { return spans_.at(c); }

 private:
  void build_names() {
    names_.clear();
    spans_.assign(schema_.columns.size(), {0, 0});
    for (std::size_t c = 0; c < schema_.columns.size(); ++c) {
      const ColumnSpec& col = schema_.columns[c];
      const std::size_t begin = names_.size();
      if (col.is_feature(schema_.drop_sensitive_features)) {
        if (col.kind == ColumnKind::kNumeric) {
          names_.push_back(col.name);
        } else {
          for (const auto& v : col.vocabulary) names_.push_back(col.name + "=" + v);
        }
      }
      spans_[c] = {begin, names_.size()};
    }
  }

  void check_compatible(const Schema& other) const {
    if (other.columns.size() != schema_.columns.size()) fail(ErrorKind::kState, "dataset schema differs from encoder");
    for (std::size_t c = 0; c < other.columns.size(); ++c) {
      const auto& a = other.columns[c];
      const auto& b = schema_.columns[c];
      if (a.name != b.name || a.kind != b.kind || a.role != b.role || a.vocabulary != b.vocabulary) {
        fail(ErrorKind::kState, "dataset column '" + a.name + "' differs from the encoder's schema");
      }
    }
  }

  Schema schema_;
  std::vector<NumericStats> stats_;
  std::vector<std::string> names_;
  std::vector<std::pair<std::size_t, std::size_t>> spans_;
};

/// Model-ready view of a subset of rows.
struct EncodedDataset {
  Tensor features;
  std::vector<int> labels;
  std::vector<std::vector<int>> sensitive;  // [sensitive column][row]
  std::vector<int> sensitive_class;
  std::vector<std::string> days;
  std::vector<std::size_t> row_ids;  // row index in the source table
  std::vector<std::string> feature_names;
  std::vector<std::string> sensitive_names;

  std::size_t rows() const { return labels.size(); }
};

inline EncodedDataset encode(const RawDataset& data, const FeatureEncoder& encoder,
                             std::span<const std::size_t> rows) {
  EncodedDataset out;
  out.features = encoder.transform(data, rows);
  out.sensitive.assign(data.sensitive.size(), {});
  for (std::size_t r : rows) {
    out.labels.push_back(data.labels[r]);
    out.sensitive_class.push_back(data.sensitive_class[r]);
    out.days.push_back(data.days[r]);
    out.row_ids.push_back(r);
    for (std::size_t k = 0; k < data.sensitive.size(); ++k) out.sensitive[k].push_back(data.sensitive[k][r]);
  }
  out.feature_names = encoder.feature_names();
  out.sensitive_names = data.sensitive_names();
  return out;
}

inline std::vector<std::size_t> all_rows(const RawDataset& data) {
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

/// Loads a CSV and encodes every row with statistics fitted on the whole file.
inline EncodedDataset ingest_csv(const std::filesystem::path& path, const Schema& schema) {
  RawDataset data = load_csv(path, schema);
  const auto rows = all_rows(data);
  return encode(data, FeatureEncoder::fit(data, rows), rows);
}

}  // namespace fairtab
