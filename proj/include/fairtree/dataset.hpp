#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fairtree/error.hpp"

namespace fairtree {

enum class ColumnKind { binary, numeric, categorical };
enum class ColumnRole { feature, target, sensitive, ignored };

inline std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::binary: return "binary";
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
  }
  return "?";
}

inline std::string_view to_string(ColumnRole r) {
  switch (r) {
    case ColumnRole::feature: return "feature";
    case ColumnRole::target: return "target";
    case ColumnRole::sensitive: return "sensitive";
    case ColumnRole::ignored: return "ignored";
  }
  return "?";
}

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  ColumnRole role = ColumnRole::feature;
  // Raw value mapped to 1; every other raw value maps to 0.
  std::optional<std::string> positive_value;
};

struct Schema {
  std::string dataset_name;
  std::vector<ColumnSpec> columns;
  // When set, header columns that the schema does not mention are ignored
  // instead of rejected.
  bool ignore_unlisted = false;

  const ColumnSpec* find(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return &c;
    return nullptr;
  }

  void validate() const {
    int targets = 0, sensitives = 0;
    std::set<std::string> seen;
    for (const auto& c : columns) {
      if (c.name.empty()) throw Error("schema: column with empty name");
      if (!seen.insert(c.name).second) throw Error("schema: duplicate column '" + c.name + "'");
      if (c.role == ColumnRole::target) ++targets;
      if (c.role == ColumnRole::sensitive) ++sensitives;
      if ((c.role == ColumnRole::target || c.role == ColumnRole::sensitive) &&
          c.kind == ColumnKind::numeric)
        throw Error("schema: target/sensitive column '" + c.name + "' must be binary or categorical");
      if ((c.role == ColumnRole::target || c.role == ColumnRole::sensitive) &&
          c.kind == ColumnKind::categorical && !c.positive_value)
        throw Error("schema: categorical " + std::string(to_string(c.role)) + " column '" + c.name +
                    "' needs positive_value");
    }
    if (targets != 1) throw Error("schema: exactly one target column required");
    if (sensitives != 1) throw Error("schema: exactly one sensitive column required");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "?" || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

// Splits one CSV record (RFC 4180 quoting, comma delimiter). Returns false at
// end of input. Quoted fields may span lines.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  std::string field;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c != '\r') {
        field.push_back(c);
      }
    }
    if (!quoted) break;
    field.push_back('\n');
    if (!std::getline(in, line)) throw Error("csv: unterminated quoted field");
  }
  fields.push_back(std::move(field));
  return true;
}

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace detail

/// Parses the schema key-value format:
///
///     # comment
///     name = compas          (optional dataset label)
///     unlisted = ignore      (optional; default rejects unknown header columns)
///
///     [column_name]
///     kind = binary | numeric | categorical
///     role = feature | target | sensitive | ignored
///     positive_value = <raw value mapped to 1>
inline Schema parse_schema(std::istream& in) {
  Schema schema;
  ColumnSpec* current = nullptr;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto where = " (line " + std::to_string(lineno) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') throw Error("schema: malformed section header" + where);
      auto name = detail::trim(line.substr(1, line.size() - 2));
      schema.columns.emplace_back().name = std::string(name);
      current = &schema.columns.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error("schema: expected key = value" + where);
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (current == nullptr) {
      if (key == "name") schema.dataset_name = std::string(value);
      else if (key == "unlisted") {
        if (value == "ignore") schema.ignore_unlisted = true;
        else if (value == "error") schema.ignore_unlisted = false;
        else throw Error("schema: unlisted must be 'ignore' or 'error'" + where);
      } else {
        throw Error("schema: unknown top-level key '" + std::string(key) + "'" + where);
      }
      continue;
    }
    if (key == "kind") {
      if (value == "binary") current->kind = ColumnKind::binary;
      else if (value == "numeric") current->kind = ColumnKind::numeric;
      else if (value == "categorical") current->kind = ColumnKind::categorical;
      else throw Error("schema: unknown kind '" + std::string(value) + "'" + where);
    } else if (key == "role") {
      if (value == "feature") current->role = ColumnRole::feature;
      else if (value == "target") current->role = ColumnRole::target;
      else if (value == "sensitive") current->role = ColumnRole::sensitive;
      else if (value == "ignored") current->role = ColumnRole::ignored;
      else throw Error("schema: unknown role '" + std::string(value) + "'" + where);
    } else if (key == "positive_value") {
      current->positive_value = std::string(value);
    } else {
      throw Error("schema: unknown column key '" + std::string(key) + "'" + where);
    }
  }
  schema.validate();
  return schema;
}

inline Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file '" + path + "'");
  return parse_schema(in);
}

/// One preprocessed feature column. Only `binary` and `numeric` kinds occur
/// here; categorical inputs arrive one-hot encoded, with `source` naming the
/// original column.
struct FeatureColumn {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::string source;
  std::vector<double> values;

  friend bool operator==(const FeatureColumn&, const FeatureColumn&) = default;
};

class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<FeatureColumn> features, std::vector<std::uint8_t> y,
          std::vector<std::uint8_t> s, std::string target_name = "y",
          std::string sensitive_name = "s")
      : features_(std::move(features)),
        y_(std::move(y)),
        s_(std::move(s)),
        target_name_(std::move(target_name)),
        sensitive_name_(std::move(sensitive_name)) {
    if (y_.size() != s_.size()) throw Error("dataset: y and s lengths differ");
    for (const auto& f : features_) {
      if (f.values.size() != y_.size())
        throw Error("dataset: column '" + f.name + "' has wrong length");
      if (f.kind == ColumnKind::categorical)
        throw Error("dataset: column '" + f.name + "' must be one-hot encoded first");
      if (f.kind == ColumnKind::binary)
        for (double v : f.values)
          if (v != 0.0 && v != 1.0) throw Error("dataset: binary column '" + f.name + "' holds non-0/1 value");
    }
    for (auto v : y_)
      if (v > 1) throw Error("dataset: y must be 0/1");
    for (auto v : s_)
      if (v > 1) throw Error("dataset: s must be 0/1");
  }

  std::size_t size() const { return y_.size(); }
  std::size_t feature_count() const { return features_.size(); }
  const std::vector<FeatureColumn>& features() const { return features_; }
  const FeatureColumn& feature(std::size_t i) const { return features_.at(i); }
  const std::vector<std::uint8_t>& y() const { return y_; }
  const std::vector<std::uint8_t>& s() const { return s_; }
  const std::string& target_name() const { return target_name_; }
  const std::string& sensitive_name() const { return sensitive_name_; }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto& f : features_) out.push_back(f.name);
    return out;
  }

  std::optional<std::size_t> find_feature(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i)
      if (features_[i].name == name) return i;
    return std::nullopt;
  }

  std::vector<double> row(std::size_t i) const {
    std::vector<double> out(features_.size());
    for (std::size_t c = 0; c < features_.size(); ++c) out[c] = features_[c].values[i];
    return out;
  }

  /// Fraction of rows with y = 1 (0 for an empty dataset).
  double prior() const {
    if (y_.empty()) return 0.0;
    return static_cast<double>(std::accumulate(y_.begin(), y_.end(), std::size_t{0})) /
           static_cast<double>(y_.size());
  }

  bool constant_target() const { return is_constant(y_); }
  bool constant_sensitive() const { return is_constant(s_); }

  /// Rows in the given order (duplicates allowed).
  Dataset subset(std::span<const std::size_t> rows) const {
    std::vector<FeatureColumn> cols;
    cols.reserve(features_.size());
    for (const auto& f : features_) {
      FeatureColumn c{f.name, f.kind, f.source, {}};
      c.values.reserve(rows.size());
      for (auto r : rows) c.values.push_back(f.values.at(r));
      cols.push_back(std::move(c));
    }
    std::vector<std::uint8_t> y, s;
    y.reserve(rows.size());
    s.reserve(rows.size());
    for (auto r : rows) {
      y.push_back(y_.at(r));
      s.push_back(s_.at(r));
    }
    return Dataset(std::move(cols), std::move(y), std::move(s), target_name_, sensitive_name_);
  }

  Dataset select_features(std::span<const std::size_t> cols) const {
    std::vector<FeatureColumn> out;
    for (auto c : cols) out.push_back(features_.at(c));
    return Dataset(std::move(out), y_, s_, target_name_, sensitive_name_);
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  static bool is_constant(const std::vector<std::uint8_t>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
  }

  std::vector<FeatureColumn> features_;
  std::vector<std::uint8_t> y_;
  std::vector<std::uint8_t> s_;
  std::string target_name_ = "y";
  std::string sensitive_name_ = "s";
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  bool constant_target = false;
  bool constant_sensitive = false;

  bool degenerate() const { return constant_target || constant_sensitive; }
};

struct LoadResult {
  Dataset data;
  LoadReport report;
};

/// Reads a CSV with a header row and applies the schema: target/sensitive
/// are binarized, categorical features are one-hot encoded (categories in
/// lexicographic order, columns named "<column>=<value>"), and rows with a
/// missing or unparseable value in any used column are dropped.
inline LoadResult parse_csv(std::istream& in, const Schema& schema) {
  schema.validate();
  std::vector<std::string> header;
  if (!detail::read_csv_record(in, header)) throw Error("csv: empty input (no header row)");
  for (auto& h : header) h = std::string(detail::trim(h));

  // Map schema columns to header positions.
  std::vector<std::optional<std::size_t>> position(schema.columns.size());
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    for (std::size_t h = 0; h < header.size(); ++h)
      if (header[h] == schema.columns[c].name) position[c] = h;
    if (!position[c]) throw Error("csv: schema column '" + schema.columns[c].name + "' not in header");
  }
  if (!schema.ignore_unlisted)
    for (const auto& h : header)
      if (!schema.find(h)) throw Error("csv: header column '" + h + "' not in schema");

  LoadReport report;
  std::vector<std::vector<std::string>> kept;  // raw tokens of used columns, schema order
  std::vector<std::string> fields;
  while (detail::read_csv_record(in, fields)) {
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;  // blank line
    ++report.rows_read;
    if (fields.size() != header.size()) {
      ++report.rows_dropped;
      continue;
    }
    std::vector<std::string> row(schema.columns.size());
    bool ok = true;
    for (std::size_t c = 0; c < schema.columns.size() && ok; ++c) {
      const auto& spec = schema.columns[c];
      if (spec.role == ColumnRole::ignored) continue;
      auto tok = detail::trim(fields[*position[c]]);
      if (detail::is_missing(tok)) {
        ok = false;
        break;
      }
      if (spec.kind != ColumnKind::categorical && !spec.positive_value) {
        auto v = detail::parse_double(tok);
        if (!v) ok = false;
        else if (spec.kind == ColumnKind::binary && *v != 0.0 && *v != 1.0) ok = false;
      }
      row[c] = std::string(tok);
    }
    if (!ok) {
      ++report.rows_dropped;
      continue;
    }
    kept.push_back(std::move(row));
  }
  if (kept.empty()) throw Error("csv: no usable rows");

  const auto n = kept.size();
  auto to_binary = [&](const ColumnSpec& spec, std::size_t c, std::size_t r) -> double {
    if (spec.positive_value) return kept[r][c] == *spec.positive_value ? 1.0 : 0.0;
    return *detail::parse_double(kept[r][c]);
  };

  std::vector<FeatureColumn> features;
  std::vector<std::uint8_t> y(n), s(n);
  std::string target_name, sensitive_name;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& spec = schema.columns[c];
    switch (spec.role) {
      case ColumnRole::ignored:
        break;
      case ColumnRole::target:
        target_name = spec.name;
        for (std::size_t r = 0; r < n; ++r) y[r] = static_cast<std::uint8_t>(to_binary(spec, c, r));
        break;
      case ColumnRole::sensitive:
        sensitive_name = spec.name;
        for (std::size_t r = 0; r < n; ++r) s[r] = static_cast<std::uint8_t>(to_binary(spec, c, r));
        break;
      case ColumnRole::feature:
        if (spec.kind == ColumnKind::categorical) {
          std::set<std::string> levels;
          for (std::size_t r = 0; r < n; ++r) levels.insert(kept[r][c]);
          for (const auto& level : levels) {
            FeatureColumn col{spec.name + "=" + level, ColumnKind::binary, spec.name, std::vector<double>(n)};
            for (std::size_t r = 0; r < n; ++r) col.values[r] = kept[r][c] == level ? 1.0 : 0.0;
            features.push_back(std::move(col));
          }
        } else {
          FeatureColumn col{spec.name, spec.kind, spec.name, std::vector<double>(n)};
          for (std::size_t r = 0; r < n; ++r) col.values[r] = to_binary(spec, c, r);
          features.push_back(std::move(col));
        }
        break;
    }
  }
  Dataset data(std::move(features), std::move(y), std::move(s), target_name, sensitive_name);
  report.constant_target = data.constant_target();
  report.constant_sensitive = data.constant_sensitive();
  return {std::move(data), report};
}

inline LoadResult load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file '" + path + "'");
  return parse_csv(in, schema);
}

// Schema describing an already-preprocessed dataset, as written by write_csv.
// Loading write_csv output with it reproduces the dataset exactly.
inline Schema derived_schema(const Dataset& data) {
  Schema schema;
  for (const auto& f : data.features()) schema.columns.push_back({f.name, f.kind, ColumnRole::feature, {}});
  schema.columns.push_back({data.target_name(), ColumnKind::binary, ColumnRole::target, {}});
  schema.columns.push_back({data.sensitive_name(), ColumnKind::binary, ColumnRole::sensitive, {}});
  return schema;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

inline void write_csv(const Dataset& data, std::ostream& out) {
  for (const auto& f : data.features()) out << detail::csv_escape(f.name) << ',';
  out << detail::csv_escape(data.target_name()) << ',' << detail::csv_escape(data.sensitive_name()) << '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (const auto& f : data.features()) out << format_number(f.values[r]) << ',';
    out << int(data.y()[r]) << ',' << int(data.s()[r]) << '\n';
  }
}

struct ThresholdSet {
  std::string column;
  std::vector<double> thresholds;
};

/// k thresholds equally spaced strictly inside (min, max) of the finite
/// values; empty when the column is constant or has no finite value.
inline std::vector<double> enumerate_thresholds(std::span<const double> values, std::size_t k) {
  if (k == 0) throw Error("enumerate_thresholds: k must be >= 1");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out;
  if (!(lo < hi)) return out;
  for (std::size_t i = 1; i <= k; ++i) {
    const double t = lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(k + 1);
    if (t > lo && t < hi && (out.empty() || t > out.back())) out.push_back(t);
  }
  return out;
}

inline ThresholdSet enumerate_thresholds(const FeatureColumn& column, std::size_t k) {
  return {column.name, enumerate_thresholds(column.values, k)};
}

}  // namespace fairtree
