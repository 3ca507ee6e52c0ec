#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtree/dataset.hpp"
#include "fairtree/error.hpp"
#include "fairtree/harness.hpp"
#include "fairtree/metrics.hpp"

namespace fairtree {

namespace fs = std::filesystem;

/// Writes via a sibling temp file and rename, so readers never see a
/// truncated file.
inline void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    body(out);
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot rename onto '" + path.string() + "'");
  }
}

inline void write_atomic(const fs::path& path, const std::string& content) {
  write_atomic(path, [&](std::ostream& out) { out << content; });
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_curve_csv(std::span<const TradeoffPoint> points, std::ostream& out) {
  out << "gamma,auroc,spd\n";
  for (const auto& p : points)
    out << format_number(p.gamma) << ',' << format_number(p.auroc) << ',' << format_number(p.spd) << '\n';
}

/// Reads a (gamma, auroc, spd) CSV. Columns are located by header name, so
/// extra columns from external tools are ignored.
inline TradeoffCurve read_curve_csv(std::istream& in, std::string method = "") {
  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields)) throw Error("curve CSV: missing header");
  int ig = -1, ia = -1, is = -1;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto f = detail::trim(fields[i]);
    if (f == "gamma") ig = static_cast<int>(i);
    if (f == "auroc") ia = static_cast<int>(i);
    if (f == "spd") is = static_cast<int>(i);
  }
  if (ia < 0 || is < 0) throw Error("curve CSV: header must name auroc and spd");
  TradeoffCurve curve{std::move(method), {}};
  std::size_t line = 1;
  while (detail::read_csv_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
    auto get = [&](int i) -> double {
      if (i < 0) return static_cast<double>(curve.points.size());
      if (static_cast<std::size_t>(i) >= fields.size()) throw Error("curve CSV: short row at line " + std::to_string(line));
      auto v = detail::parse_double(detail::trim(fields[static_cast<std::size_t>(i)]));
      if (!v) throw Error("curve CSV: bad number at line " + std::to_string(line));
      return *v;
    };
    curve.points.push_back({get(ig), get(ia), get(is)});
  }
  if (curve.points.empty()) throw Error("curve CSV: no points");
  return curve;
}

inline TradeoffCurve read_curve_csv(const fs::path& path, std::string method = "") {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return read_curve_csv(in, std::move(method));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline const char* const metrics_header = "dataset,method,holdout,max_depth,min_samples,autoc,n_pareto,n_unique,n_unique_pareto,var_pairwise";

inline std::string holdout_curve_name(std::size_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "curve_holdout_%02zu.csv", h);
  return buf;
}

inline nlohmann::json summary_json(const HoldoutReport& r) {
  auto ms = [](const MetricSummary& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
  nlohmann::json j;
  j["dataset"] = r.dataset;
  j["method"] = std::string(to_string(r.method.kind));
  j["gamma_range"] = {r.method.gamma_min, r.method.gamma_max};
  j["gamma_steps"] = r.method.gamma_steps;
  j["holdouts"] = r.config.holdouts;
  j["folds"] = r.config.folds;
  j["train_fraction"] = r.config.train_fraction;
  j["master_seed"] = r.config.master_seed;
  j["threshold_count"] = r.config.threshold_count;
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t c = 0; c < r.completed_cells.size(); ++c)
    cells.push_back({{"max_depth", r.completed_cells[c].max_depth},
                     {"min_samples", r.completed_cells[c].min_samples},
                     {"inner_autoc", r.inner_autoc[c]}});
  j["completed_cells"] = cells;
  j["budget_exhausted"] = r.budget_exhausted;
  j["aggregate"] = {{"autoc", ms(r.aggregate.autoc)},
                    {"n_pareto", ms(r.aggregate.n_pareto)},
                    {"n_unique", ms(r.aggregate.n_unique)},
                    {"n_unique_pareto", ms(r.aggregate.n_unique_pareto)},
                    {"var_pairwise", ms(r.aggregate.var_pairwise)}};
  j["events"] = {{"single_class_auroc", r.events.single_class_auroc},
                 {"empty_group_spd", r.events.empty_group_spd},
                 {"empty_trees", r.events.empty_trees},
                 {"constant_target", r.constant_target},
                 {"constant_sensitive", r.constant_sensitive}};
  j["timing"] = {{"seconds", r.seconds}};
  return j;
}

/// Writes the experiment directory: one curve CSV per hold-out, metrics.csv,
/// avg_curve.csv and summary.json. Only the "timing" entry of the summary
/// varies between identical runs.
inline void write_experiment(const HoldoutReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& h : r.holdouts)
    write_atomic(dir / holdout_curve_name(h.index), [&](std::ostream& out) { write_curve_csv(h.curve.points, out); });

  write_atomic(dir / "metrics.csv", [&](std::ostream& out) {
    out << metrics_header << '\n';
    const auto method = to_string(r.method.kind);
    for (const auto& h : r.holdouts) {
      out << detail::csv_escape(r.dataset) << ',' << method << ',' << h.index << ',' << h.selected.max_depth << ','
          << format_number(h.selected.min_samples) << ',' << format_number(h.metrics.autoc) << ','
          << h.metrics.n_pareto << ',' << h.metrics.n_unique << ',' << h.metrics.n_unique_pareto << ','
          << format_number(h.metrics.var_pairwise) << '\n';
    }
  });

  write_atomic(dir / "avg_curve.csv", [&](std::ostream& out) {
    out << "gamma,mean_auroc,mean_spd\n";
    for (const auto& p : r.averaged_curve)
      out << format_number(p.gamma) << ',' << format_number(p.auroc) << ',' << format_number(p.spd) << '\n';
  });

  write_atomic(dir / "summary.json", summary_json(r).dump(2) + "\n");
}

struct MetricsRow {
  std::string dataset;
  std::string method;
  std::size_t holdout = 0;
  CurveMetrics metrics;
};

inline std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields)) throw Error(path.string() + ": empty metrics file");
  auto col = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (detail::trim(fields[i]) == name) return i;
    throw Error(path.string() + ": metrics header lacks '" + std::string(name) + "'");
  };
  const auto cd = col("dataset"), cm = col("method"), ch = col("holdout"), ca = col("autoc"), cp = col("n_pareto"),
             cu = col("n_unique"), cup = col("n_unique_pareto"), cv = col("var_pairwise");
  const std::size_t width = fields.size();
  std::vector<MetricsRow> rows;
  std::size_t line = 1;
  while (detail::read_csv_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
    if (fields.size() != width) throw Error(path.string() + ": wrong field count at line " + std::to_string(line));
    auto num = [&](std::size_t i) {
      auto v = detail::parse_double(detail::trim(fields[i]));
      if (!v) throw Error(path.string() + ": bad number at line " + std::to_string(line));
      return *v;
    };
    MetricsRow r;
    r.dataset = fields[cd];
    r.method = fields[cm];
    r.holdout = static_cast<std::size_t>(num(ch));
    r.metrics.autoc = num(ca);
    r.metrics.n_pareto = static_cast<std::size_t>(num(cp));
    r.metrics.n_unique = static_cast<std::size_t>(num(cu));
    r.metrics.n_unique_pareto = static_cast<std::size_t>(num(cup));
    r.metrics.var_pairwise = num(cv);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(path.string() + ": no metric rows");
  return rows;
}

}  // namespace fairtree
