#pragma once

// Dataset schema file, e.g.
//
//   version = 1
//   missing = reject                  # reject | impute
//   unknown = reject                  # reject | map
//   drop_sensitive_features = false
//   categorical_encoding = one_hot
//
//   column nationality {
//     kind = categorical
//     role = sensitive
//     vocabulary = [N00, N01, N02]
//     privileged = [N00]
//   }

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "fairtab/kvconfig.hpp"

namespace fairtab {

enum class ColumnKind { kNumeric, kCategorical };
enum class ColumnRole { kFeature, kLabel, kDayKey, kSensitive };
enum class MissingPolicy { kReject, kImpute };
enum class UnknownPolicy { kReject, kMap };

inline const char* to_string(ColumnKind k) { return k == ColumnKind::kNumeric ? "numeric" : "categorical"; }

inline const char* to_string(ColumnRole r) {
  switch (r) {
    case ColumnRole::kFeature: return "feature";
    case ColumnRole::kLabel: return "label";
    case ColumnRole::kDayKey: return "day_key";
    case ColumnRole::kSensitive: return "sensitive";
  }
  return "?";
}

// Extra categories appended to a vocabulary by the missing/unknown policies.
inline constexpr const char* kMissingCategory = "__missing__";
inline constexpr const char* kUnknownCategory = "__unknown__";

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  ColumnRole role = ColumnRole::kFeature;
  std::vector<std::string> vocabulary;  // categorical only; empty = infer at ingestion
  std::vector<std::string> privileged;  // sensitive only: values with S = 0

  bool is_feature(bool drop_sensitive) const {
    return role == ColumnRole::kFeature || (role == ColumnRole::kSensitive && !drop_sensitive);
  }
  int category_index(const std::string& value) const {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), value);
    return it == vocabulary.end() ? -1 : static_cast<int>(it - vocabulary.begin());
  }
};

struct Schema {
  std::vector<ColumnSpec> columns;
  MissingPolicy missing = MissingPolicy::kReject;
  UnknownPolicy unknown = UnknownPolicy::kReject;
  bool drop_sensitive_features = false;

  const ColumnSpec* find(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return &c;
    return nullptr;
  }

  std::vector<std::size_t> columns_with_role(ColumnRole role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].role == role) out.push_back(i);
    return out;
  }

  std::size_t label_column() const { return columns_with_role(ColumnRole::kLabel).at(0); }
  std::size_t day_column() const { return columns_with_role(ColumnRole::kDayKey).at(0); }
  std::vector<std::size_t> sensitive_columns() const { return columns_with_role(ColumnRole::kSensitive); }

  void validate() const {
    if (columns_with_role(ColumnRole::kLabel).size() != 1) {
      fail(ErrorKind::kConfig, "schema needs exactly one label column");
    }
    if (columns_with_role(ColumnRole::kDayKey).size() != 1) {
      fail(ErrorKind::kConfig, "schema needs exactly one day_key column");
    }
    const auto sensitive = sensitive_columns();
    if (sensitive.empty()) fail(ErrorKind::kConfig, "schema needs at least one sensitive column");
    if (sensitive.size() > 8) fail(ErrorKind::kConfig, "at most 8 sensitive columns are supported");
    bool any_feature = false;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const auto& c = columns[i];
      for (std::size_t j = 0; j < i; ++j)
        if (columns[j].name == c.name) fail(ErrorKind::kConfig, "duplicate column '" + c.name + "'");
      if (c.role == ColumnRole::kSensitive) {
        if (c.kind != ColumnKind::kCategorical) {
          fail(ErrorKind::kConfig, "sensitive column '" + c.name + "' must be categorical");
        }
        if (c.privileged.empty()) {
          fail(ErrorKind::kConfig, "sensitive column '" + c.name + "' needs 'privileged' values");
        }
      } else if (!c.privileged.empty()) {
        fail(ErrorKind::kConfig, "'privileged' is only valid on sensitive columns ('" + c.name + "')");
      }
      if (c.kind == ColumnKind::kNumeric && !c.vocabulary.empty()) {
        fail(ErrorKind::kConfig, "numeric column '" + c.name + "' cannot have a vocabulary");
      }
      if (c.role == ColumnRole::kLabel && c.kind != ColumnKind::kNumeric) {
        fail(ErrorKind::kConfig, "label column '" + c.name + "' must be numeric (0/1)");
      }
      if (c.role == ColumnRole::kDayKey && c.kind != ColumnKind::kCategorical) {
        fail(ErrorKind::kConfig, "day_key column '" + c.name + "' must be categorical (ISO date)");
      }
      if (c.role == ColumnRole::kDayKey && !c.vocabulary.empty()) {
        fail(ErrorKind::kConfig, "day_key column '" + c.name + "' cannot have a vocabulary");
      }
      any_feature = any_feature || c.is_feature(drop_sensitive_features);
    }
    if (!any_feature) fail(ErrorKind::kConfig, "schema has no feature columns");
  }

  std::string to_text() const {
    std::ostringstream out;
    out << "version = 1\n";
    out << "missing = " << (missing == MissingPolicy::kReject ? "reject" : "impute") << '\n';
    out << "unknown = " << (unknown == UnknownPolicy::kReject ? "reject" : "map") << '\n';
    out << "drop_sensitive_features = " << (drop_sensitive_features ? "true" : "false") << '\n';
    out << "categorical_encoding = one_hot\n";
    auto list = [&](const std::vector<std::string>& values) {
      out << '[';
      for (std::size_t i = 0; i < values.size(); ++i) out << (i ? ", " : "") << kv_quote(values[i]);
      out << "]\n";
    };
    for (const auto& c : columns) {
      out << "\ncolumn " << kv_quote(c.name) << " {\n";
      out << "  kind = " << to_string(c.kind) << '\n';
      out << "  role = " << to_string(c.role) << '\n';
      if (!c.vocabulary.empty()) {
        out << "  vocabulary = ";
        list(c.vocabulary);
      }
      if (!c.privileged.empty()) {
        out << "  privileged = ";
        list(c.privileged);
      }
      out << "}\n";
    }
    return out.str();
  }
};

/// Reads a schema from parsed structured text (a whole file or a nested block).
inline Schema parse_schema_block(const KvBlock& root) {
  const std::string& source = root.source;
  require_version(root, 1);
  root.check_keys({"version", "missing", "unknown", "drop_sensitive_features", "categorical_encoding"},
                  {"column"});
  Schema schema;
  const std::string missing = root.get_string("missing", "reject");
  if (missing == "reject") schema.missing = MissingPolicy::kReject;
  else if (missing == "impute") schema.missing = MissingPolicy::kImpute;
  else fail(ErrorKind::kConfig, source + ": missing must be reject or impute");
  const std::string unknown = root.get_string("unknown", "reject");
  if (unknown == "reject") schema.unknown = UnknownPolicy::kReject;
  else if (unknown == "map") schema.unknown = UnknownPolicy::kMap;
  else fail(ErrorKind::kConfig, source + ": unknown must be reject or map");
  schema.drop_sensitive_features = root.get_bool("drop_sensitive_features", false);
  if (root.get_string("categorical_encoding", "one_hot") != "one_hot") {
    fail(ErrorKind::kConfig, source + ": only categorical_encoding = one_hot is supported");
  }

  for (const auto& block : root.blocks) {
    block.check_keys({"kind", "role", "vocabulary", "privileged"});
    ColumnSpec c;
    c.name = block.name;
    if (c.name.empty()) fail(ErrorKind::kConfig, block.where(block.line) + ": column needs a name");
    const std::string kind = block.require_string("kind");
    if (kind == "numeric") c.kind = ColumnKind::kNumeric;
    else if (kind == "categorical") c.kind = ColumnKind::kCategorical;
    else fail(ErrorKind::kConfig, block.where(block.line) + ": kind must be numeric or categorical");
    const std::string role = block.get_string("role", "feature");
    if (role == "feature") c.role = ColumnRole::kFeature;
    else if (role == "label") c.role = ColumnRole::kLabel;
    else if (role == "day_key") c.role = ColumnRole::kDayKey;
    else if (role == "sensitive") c.role = ColumnRole::kSensitive;
    else fail(ErrorKind::kConfig, block.where(block.line) + ": unknown role '" + role + "'");
    c.vocabulary = block.get_list("vocabulary");
    c.privileged = block.get_list("privileged");
    for (std::size_t i = 0; i < c.vocabulary.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (c.vocabulary[i] == c.vocabulary[j]) {
          fail(ErrorKind::kConfig, "column '" + c.name + "': duplicate category '" + c.vocabulary[i] + "'");
        }
    if (!c.vocabulary.empty()) {
      for (const auto& p : c.privileged)
        if (c.category_index(p) < 0) {
          fail(ErrorKind::kConfig, "column '" + c.name + "': privileged value '" + p + "' not in vocabulary");
        }
    }
    schema.columns.push_back(std::move(c));
  }
  schema.validate();
  return schema;
}

inline Schema parse_schema(std::string_view text, const std::string& source) {
  return parse_schema_block(parse_kv(text, source));
}

}  // namespace fairtab
