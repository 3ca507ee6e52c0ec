// fairtree_cli: trade-off curves, hold-out experiments, runtime benchmarks
// and summary tables for fairness-aware decision trees.
//
//   fairtree_cli curve      --config run.json [--seed N] [--out DIR]
//   fairtree_cli experiment --config run.json [--workers N] [--budget-seconds S]
//   fairtree_cli bench      --config bench.json
//   fairtree_cli report     --config report.json
//
// Exit status: 0 on success, 1 when a run fails, 2 for invalid configuration.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtree/fairtree.hpp"

namespace {

using fairtree::Error;
using nlohmann::json;
namespace fs = std::filesystem;

enum class Verbosity { quiet, normal, verbose };

struct ConfigError : Error {
  using Error::Error;
};

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<double> budget_seconds;
  std::string out;
  bool quiet = false;
  bool verbose = false;
};

Verbosity g_verbosity = Verbosity::normal;

void info(const std::string& msg) {
  if (g_verbosity != Verbosity::quiet) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
  if (g_verbosity == Verbosity::verbose) std::cerr << msg << '\n';
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// ---------------------------------------------------------------------------
// Configuration

struct DatasetSource {
  std::optional<fs::path> csv;
  std::optional<fs::path> schema;
  std::size_t synth_n = 0;
  double synth_bias = 0.0;
  std::uint64_t synth_seed = 0;
  std::string name;
};

struct RunConfig {
  fs::path base;  // directory of the config file; relative paths resolve here
  json doc;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::optional<double> budget_seconds;
  fs::path out;
};

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: '") + key + "' has the wrong type");
  }
}

template <class Fn>
void as_config(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const auto* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("config: unknown key '" + k + "' in " + where);
  }
}

fs::path resolve(const RunConfig& rc, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : rc.base / path;
}

RunConfig load_run_config(const Flags& f, const char* command) {
  RunConfig rc;
  if (f.config.empty()) throw ConfigError("--config is required");
  std::ifstream in(f.config);
  if (!in) throw ConfigError("cannot open config '" + f.config + "'");
  try {
    rc.doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + f.config + "' is not valid JSON: " + e.what());
  }
  if (!rc.doc.is_object()) throw ConfigError("config: top level must be an object");
  rc.base = fs::path(f.config).parent_path();
  rc.seed = f.seed ? *f.seed : get_or<std::uint64_t>(rc.doc, "seed", 0);
  rc.workers = f.workers ? *f.workers : get_or<std::size_t>(rc.doc, "workers", 1);
  if (rc.workers == 0) throw ConfigError("workers must be >= 1");
  rc.budget_seconds = f.budget_seconds;
  if (!rc.budget_seconds && rc.doc.contains("budget_seconds") && !rc.doc["budget_seconds"].is_null())
    rc.budget_seconds = get_or<double>(rc.doc, "budget_seconds", 0.0);
  if (rc.budget_seconds && !(*rc.budget_seconds > 0.0)) throw ConfigError("budget_seconds must be positive");

  if (!f.out.empty()) {
    rc.out = f.out;
  } else if (rc.doc.contains("out")) {
    rc.out = resolve(rc, get_or<std::string>(rc.doc, "out", ""));
  } else if (const char* root = std::getenv("FAIRTREE_OUT"); root && *root) {
    rc.out = fs::path(root) / command;
  } else {
    throw ConfigError("no output directory: pass --out, set 'out' in the config, or set FAIRTREE_OUT");
  }
  return rc;
}

DatasetSource parse_dataset(const RunConfig& rc) {
  if (!rc.doc.contains("dataset")) throw ConfigError("config: 'dataset' is required");
  const auto& d = rc.doc["dataset"];
  check_keys(d, "dataset", {"csv", "schema", "synthetic", "name"});
  DatasetSource src;
  src.name = get_or<std::string>(d, "name", "");
  if (d.contains("synthetic")) {
    if (d.contains("csv")) throw ConfigError("config: dataset takes either 'csv' or 'synthetic'");
    const auto& s = d["synthetic"];
    check_keys(s, "dataset.synthetic", {"n", "bias", "seed"});
    src.synth_n = get_or<std::size_t>(s, "n", 0);
    src.synth_bias = get_or<double>(s, "bias", 0.0);
    src.synth_seed = get_or<std::uint64_t>(s, "seed", 0);
    if (src.synth_n < 4) throw ConfigError("config: dataset.synthetic.n must be >= 4");
    if (!(src.synth_bias >= 0.0 && src.synth_bias <= 1.0)) throw ConfigError("config: synthetic bias must lie in [0, 1]");
    if (src.name.empty()) src.name = "synthetic";
    return src;
  }
  if (!d.contains("csv") || !d.contains("schema")) throw ConfigError("config: dataset needs 'csv' and 'schema'");
  src.csv = resolve(rc, get_or<std::string>(d, "csv", ""));
  src.schema = resolve(rc, get_or<std::string>(d, "schema", ""));
  if (!fs::is_regular_file(*src.csv)) throw ConfigError("dataset file '" + src.csv->string() + "' not found");
  if (!fs::is_regular_file(*src.schema)) throw ConfigError("schema file '" + src.schema->string() + "' not found");
  return src;
}

fairtree::Dataset load_dataset(DatasetSource& src) {
  if (!src.csv) return fairtree::synth_biased(src.synth_n, src.synth_bias, src.synth_seed);
  const auto schema = fairtree::load_schema(src.schema->string());
  if (src.name.empty()) src.name = schema.dataset_name.empty() ? src.csv->stem().string() : schema.dataset_name;
  auto loaded = fairtree::load_csv(src.csv->string(), schema);
  info("loaded " + std::to_string(loaded.report.rows_read - loaded.report.rows_dropped) + " of " +
       std::to_string(loaded.report.rows_read) + " rows from " + src.csv->string());
  if (loaded.report.constant_target) warn("target column is constant");
  if (loaded.report.constant_sensitive) warn("sensitive column is constant");
  return std::move(loaded.data);
}

fairtree::MethodKind method_kind(const std::string& name) {
  try {
    return fairtree::parse_method(name);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

fairtree::MethodSpec parse_method_spec(const json& j) {
  if (j.is_string()) return fairtree::MethodSpec::defaults(method_kind(j.get<std::string>()));
  check_keys(j, "method", {"name", "gamma_min", "gamma_max", "gamma_steps"});
  if (!j.contains("name")) throw ConfigError("config: method needs a 'name'");
  auto m = fairtree::MethodSpec::defaults(method_kind(get_or<std::string>(j, "name", "")));
  m.gamma_min = get_or<double>(j, "gamma_min", m.gamma_min);
  m.gamma_max = get_or<double>(j, "gamma_max", m.gamma_max);
  m.gamma_steps = get_or<std::size_t>(j, "gamma_steps", m.gamma_steps);
  try {
    m.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return m;
}

std::vector<fairtree::MethodSpec> parse_methods(const RunConfig& rc) {
  std::vector<fairtree::MethodSpec> out;
  if (rc.doc.contains("method")) out.push_back(parse_method_spec(rc.doc["method"]));
  if (rc.doc.contains("methods")) {
    if (!rc.doc["methods"].is_array()) throw ConfigError("config: 'methods' must be a list");
    for (const auto& m : rc.doc["methods"]) out.push_back(parse_method_spec(m));
  }
  if (out.empty()) throw ConfigError("config: no method given");
  return out;
}

fairtree::GrowthLimits parse_limits(const RunConfig& rc) {
  fairtree::GrowthLimits l;
  if (rc.doc.contains("limits")) {
    const auto& j = rc.doc["limits"];
    check_keys(j, "limits", {"max_depth", "min_samples", "threshold_count"});
    l.max_depth = get_or<std::size_t>(j, "max_depth", l.max_depth);
    l.min_samples = get_or<double>(j, "min_samples", l.min_samples);
    l.threshold_count = get_or<std::size_t>(j, "threshold_count", l.threshold_count);
  }
  as_config([&] { l.validate(); });
  return l;
}

void check_top_level(const RunConfig& rc, std::initializer_list<const char*> extra) {
  std::vector<const char*> allowed{"seed", "workers", "budget_seconds", "out", "comment"};
  allowed.insert(allowed.end(), extra.begin(), extra.end());
  for (const auto& [k, _] : rc.doc.items()) {
    bool ok = false;
    for (const auto* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("config: unknown top-level key '" + k + "'");
  }
}

void write_text(const fs::path& p, const std::string& s) { fairtree::write_atomic(p, s); }

// ---------------------------------------------------------------------------
// Commands

int cmd_curve(const Flags& flags) {
  auto rc = load_run_config(flags, "curve");
  check_top_level(rc, {"dataset", "method", "limits", "split", "partition_grid"});
  auto src = parse_dataset(rc);
  if (rc.doc.contains("methods")) throw ConfigError("config: curve takes a single 'method'");
  const auto method = parse_methods(rc).front();
  const auto limits = parse_limits(rc);
  double train_fraction = 2.0 / 3.0;
  std::uint64_t split_seed = fairtree::derive_seed(rc.seed, 1, 0);
  if (rc.doc.contains("split")) {
    const auto& s = rc.doc["split"];
    check_keys(s, "split", {"train_fraction", "seed"});
    train_fraction = get_or<double>(s, "train_fraction", train_fraction);
    if (s.contains("seed")) split_seed = get_or<std::uint64_t>(s, "seed", 0);
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split.train_fraction must lie in (0, 1)");
  }
  std::optional<fairtree::PartitionGrid> grid;
  if (rc.doc.contains("partition_grid")) {
    if (method.kind != fairtree::MethodKind::two_trees)
      throw ConfigError("partition_grid is only available for the two_trees method");
    const auto& g = rc.doc["partition_grid"];
    check_keys(g, "partition_grid", {"x", "y", "x_range", "y_range", "resolution", "gammas"});
    grid.emplace();
    grid->resolution = get_or<std::size_t>(g, "resolution", grid->resolution);
    if (grid->resolution < 2) throw ConfigError("partition_grid.resolution must be >= 2");
  }

  const auto data = load_dataset(src);
  const auto [train, test] = fairtree::holdout_split(data, train_fraction, split_seed);
  const auto gammas = fairtree::gamma_grid(method);
  if (grid) {
    const auto& g = rc.doc["partition_grid"];
    auto column = [&](const char* key) {
      const auto name = get_or<std::string>(g, key, "");
      auto idx = data.find_feature(name);
      if (!idx) throw ConfigError(std::string("partition_grid.") + key + ": unknown feature '" + name + "'");
      return *idx;
    };
    grid->x_column = column("x");
    grid->y_column = column("y");
    auto range = [&](const char* key, std::size_t col, double& lo, double& hi) {
      const auto& v = data.feature(col).values;
      lo = *std::min_element(v.begin(), v.end());
      hi = *std::max_element(v.begin(), v.end());
      if (g.contains(key)) {
        const auto r = g.at(key).get<std::vector<double>>();
        if (r.size() != 2 || !(r[0] < r[1])) throw ConfigError(std::string("partition_grid.") + key + " must be [lo, hi]");
        lo = r[0];
        hi = r[1];
      }
    };
    range("x_range", grid->x_column, grid->x_min, grid->x_max);
    range("y_range", grid->y_column, grid->y_min, grid->y_max);
    grid->base_row.assign(data.feature_count(), 0.0);
    for (std::size_t c = 0; c < data.feature_count(); ++c) {
      const auto& v = train.feature(c).values;
      auto sorted = v;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
      grid->base_row[c] = sorted[sorted.size() / 2];
    }
  }

  fs::create_directories(rc.out);
  info("curve: " + std::string(fairtree::to_string(method.kind)) + " on " + src.name + " (" +
       std::to_string(train.size()) + " train / " + std::to_string(test.size()) + " test rows)");
  const auto result = fairtree::build_curve(method.kind, train, test, gammas, limits);
  fairtree::write_atomic(rc.out / "curve.csv",
                         [&](std::ostream& o) { fairtree::write_curve_csv(result.curve.points, o); });
  if (result.events.any() || result.events.empty_trees)
    warn("degenerate evaluations: " + std::to_string(result.events.single_class_auroc) + " single-class AUROC, " +
         std::to_string(result.events.empty_group_spd) + " empty-group SPD, " +
         std::to_string(result.events.empty_trees) + " empty trees");

  if (method.kind == fairtree::MethodKind::two_trees) {
    const auto model = fairtree::train_2tft(train, limits);
    write_text(rc.out / "model.json", fairtree::to_json(model).dump(2) + "\n");
    write_text(rc.out / "tree_y.txt", fairtree::to_text(model.t_y));
    write_text(rc.out / "tree_s.txt", fairtree::to_text(model.t_s));
    if (grid) {
      std::vector<double> grid_gammas = gammas;
      if (rc.doc["partition_grid"].contains("gammas"))
        grid_gammas = rc.doc["partition_grid"]["gammas"].get<std::vector<double>>();
      for (double gm : grid_gammas) fairtree::check_mix_gamma(gm);
      fairtree::write_atomic(rc.out / "partition.csv",
                             [&](std::ostream& o) { fairtree::write_partition_grid(model, *grid, grid_gammas, o); });
    }
  } else {
    const std::pair<const char*, double> ends[] = {{"gamma_min", gammas.front()}, {"gamma_max", gammas.back()}};
    for (const auto& [label, g] : ends) {
      fairtree::Tree tree;
      if (method.kind == fairtree::MethodKind::dtfc) {
        tree = fairtree::dtfc_train(train, g, limits).tree;
      } else {
        const auto kind = method.kind == fairtree::MethodKind::combined ? fairtree::PolicyKind::combined
                                                                        : fairtree::PolicyKind::constrained;
        tree = fairtree::train_tree(train, fairtree::PolicyConfig{kind, g}, limits);
      }
      const std::string stem = std::string("tree_") + label;
      write_text(rc.out / (stem + ".txt"), fairtree::to_text(tree));
      write_text(rc.out / (stem + ".json"), fairtree::to_json(tree).dump(2) + "\n");
    }
  }
  info("wrote " + (rc.out / "curve.csv").string());
  return 0;
}

int cmd_experiment(const Flags& flags) {
  auto rc = load_run_config(flags, "experiment");
  check_top_level(rc, {"dataset", "method", "methods", "grid", "experiment"});
  auto src = parse_dataset(rc);
  const auto methods = parse_methods(rc);
  fairtree::HyperGrid grid;
  std::vector<fairtree::GridCell> cells;  // explicit list, tried as given
  if (rc.doc.contains("grid")) {
    const auto& g = rc.doc["grid"];
    check_keys(g, "grid", {"max_depths", "min_samples", "cells"});
    if (g.contains("cells")) {
      if (g.contains("max_depths") || g.contains("min_samples"))
        throw ConfigError("grid: give either 'cells' or 'max_depths'/'min_samples'");
      if (!g["cells"].is_array() || g["cells"].empty()) throw ConfigError("grid.cells must be a nonempty list");
      for (const auto& c : g["cells"]) {
        if (!c.is_array() || c.size() != 2 || !c[0].is_number_unsigned() || !c[1].is_number())
          throw ConfigError("grid.cells entries must be [max_depth, min_samples]");
        cells.push_back({c[0].get<std::size_t>(), c[1].get<double>()});
      }
    } else {
      grid.max_depths = get_or(g, "max_depths", grid.max_depths);
      grid.min_samples = get_or(g, "min_samples", grid.min_samples);
      as_config([&] { grid.validate(); });
    }
  }
  if (cells.empty()) cells = fairtree::cost_ordered(grid);
  for (const auto& c : cells) {
    if (c.max_depth < 1) throw ConfigError("grid max_depth must be >= 1");
    if (!(c.min_samples > 0.0 && c.min_samples <= 1.0)) throw ConfigError("grid min_samples must lie in (0, 1]");
  }
  fairtree::ExperimentConfig cfg;
  if (rc.doc.contains("experiment")) {
    const auto& e = rc.doc["experiment"];
    check_keys(e, "experiment", {"holdouts", "folds", "train_fraction", "threshold_count"});
    cfg.holdouts = get_or(e, "holdouts", cfg.holdouts);
    cfg.folds = get_or(e, "folds", cfg.folds);
    cfg.train_fraction = get_or(e, "train_fraction", cfg.train_fraction);
    cfg.threshold_count = get_or(e, "threshold_count", cfg.threshold_count);
  }
  cfg.master_seed = rc.seed;
  cfg.workers = rc.workers;
  if (rc.budget_seconds) cfg.budget = fairtree::Seconds(*rc.budget_seconds);
  as_config([&] { cfg.validate(); });
  for (std::size_t a = 0; a < methods.size(); ++a)
    for (std::size_t b = a + 1; b < methods.size(); ++b)
      if (methods[a].kind == methods[b].kind) throw ConfigError("config: method listed twice");

  const auto data = load_dataset(src);
  if (data.constant_target() || data.constant_sensitive()) warn("dataset is degenerate; metrics will be flagged");
  fs::create_directories(rc.out);
  for (const auto& m : methods) {
    const std::string name(fairtree::to_string(m.kind));
    info("experiment: " + name + " on " + src.name);
    const auto report = fairtree::run_experiment(data, m, cells, cfg, src.name);
    if (report.budget_exhausted)
      warn(name + ": time budget exhausted after " + std::to_string(report.completed_cells.size()) + " of " +
           std::to_string(cells.size()) + " grid cells");
    for (std::size_t c = 0; c < report.completed_cells.size(); ++c)
      debug("  cell (" + std::to_string(report.completed_cells[c].max_depth) + ", " +
            fairtree::format_number(report.completed_cells[c].min_samples) + ") completed");
    fairtree::write_experiment(report, rc.out / name);
    info("  AUTOC " + fairtree::format_number(report.aggregate.autoc.mean) + " +- " +
         fairtree::format_number(report.aggregate.autoc.std) + " -> " + (rc.out / name).string());
  }
  return 0;
}

int cmd_bench(const Flags& flags) {
  auto rc = load_run_config(flags, "bench");
  check_top_level(rc, {"dataset", "bench"});
  auto src = parse_dataset(rc);
  if (!rc.doc.contains("bench")) throw ConfigError("config: 'bench' section is required");
  const auto& b = rc.doc["bench"];
  check_keys(b, "bench", {"axis", "steps", "methods", "base_instances", "base_depth", "base_features", "gamma_steps",
                          "min_samples", "repeats"});
  fairtree::BenchConfig cfg;
  try {
    cfg.axis = fairtree::parse_axis(get_or<std::string>(b, "axis", ""));
  } catch (const Error& e) {
    throw ConfigError(std::string("bench.") + e.what());
  }
  cfg.steps = get_or<std::vector<std::size_t>>(b, "steps", {});
  if (cfg.steps.empty()) throw ConfigError("bench.steps must list at least one value");
  if (b.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : b["methods"]) cfg.methods.push_back(method_kind(m.get<std::string>()));
  }
  cfg.base_instances = get_or(b, "base_instances", cfg.base_instances);
  cfg.base_depth = get_or(b, "base_depth", cfg.base_depth);
  cfg.base_features = get_or(b, "base_features", cfg.base_features);
  cfg.gamma_steps = get_or(b, "gamma_steps", cfg.gamma_steps);
  cfg.min_samples = get_or(b, "min_samples", cfg.min_samples);
  cfg.repeats = get_or(b, "repeats", cfg.repeats);
  cfg.seed = rc.seed;
  for (auto v : cfg.steps)
    if (v == 0) throw ConfigError("bench.steps must be positive");
  if (cfg.gamma_steps < 2) throw ConfigError("bench.gamma_steps must be >= 2");
  if (cfg.repeats < 1) throw ConfigError("bench.repeats must be >= 1");

  const auto data = load_dataset(src);
  fs::create_directories(rc.out);
  const auto rows = fairtree::runtime_benchmark(data, cfg);
  fairtree::write_atomic(rc.out / "bench.csv", [&](std::ostream& o) {
    o << "method," << fairtree::to_string(cfg.axis) << ",seconds\n";
    for (const auto& r : rows)
      o << fairtree::to_string(r.method) << ',' << r.value << ',' << fairtree::format_number(r.seconds) << '\n';
  });
  info("wrote " + (rc.out / "bench.csv").string());
  return 0;
}

int cmd_report(const Flags& flags) {
  auto rc = load_run_config(flags, "report");
  check_top_level(rc, {"inputs"});
  if (!rc.doc.contains("inputs") || !rc.doc["inputs"].is_array() || rc.doc["inputs"].empty())
    throw ConfigError("config: 'inputs' must list experiment directories");
  std::vector<fairtree::ReportInput> inputs;
  for (const auto& j : rc.doc["inputs"]) {
    fairtree::ReportInput in;
    if (j.is_string()) {
      in.dir = resolve(rc, j.get<std::string>());
    } else {
      check_keys(j, "inputs[]", {"dir", "baseline", "dataset", "method"});
      in.dir = resolve(rc, get_or<std::string>(j, "dir", ""));
      in.baseline = get_or(j, "baseline", false);
      in.dataset = get_or<std::string>(j, "dataset", "");
      in.method = get_or<std::string>(j, "method", "");
    }
    if (!fs::is_directory(in.dir)) throw ConfigError("report input '" + in.dir.string() + "' is not a directory");
    inputs.push_back(std::move(in));
  }
  std::vector<fairtree::MethodSamples> samples;
  for (const auto& in : inputs) samples.push_back(fairtree::load_report_input(in));
  const auto rep = fairtree::build_report(samples);
  fs::create_directories(rc.out);
  fairtree::write_atomic(rc.out / "report.csv", [&](std::ostream& o) { fairtree::write_report_csv(rep, o); });
  fairtree::write_atomic(rc.out / "pvalues.csv", [&](std::ostream& o) { fairtree::write_pvalues_csv(rep, o); });
  std::ostringstream text;
  fairtree::write_report_text(rep, text);
  fairtree::write_atomic(rc.out / "report.txt", text.str());
  if (g_verbosity != Verbosity::quiet) std::cout << text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware decision trees: trade-off curves, experiments, benchmarks, reports"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON run configuration")->required();
    sub->add_option("--seed", flags.seed, "master seed (overrides config)");
    sub->add_option("--workers", flags.workers, "worker threads (overrides config)");
    sub->add_option("--budget-seconds", flags.budget_seconds, "grid-search time budget (overrides config)");
    sub->add_option("--out", flags.out, "output directory (overrides config and FAIRTREE_OUT)");
    sub->add_flag("--quiet", flags.quiet, "only warnings and errors");
    sub->add_flag("--verbose", flags.verbose, "extra progress output");
  };
  auto* curve = app.add_subcommand("curve", "train one method over its gamma grid and write the trade-off curve");
  auto* experiment = app.add_subcommand("experiment", "repeated hold-out evaluation with inner grid search");
  auto* bench = app.add_subcommand("bench", "time one curve per method along one axis");
  auto* report = app.add_subcommand("report", "summary table and Welch p-values over experiment directories");
  for (auto* s : {curve, experiment, bench, report}) add_common(s);
  CLI11_PARSE(app, argc, argv);

  if (flags.quiet && flags.verbose) {
    std::cerr << "fairtree: --quiet and --verbose are exclusive\n";
    return 2;
  }
  g_verbosity = flags.quiet ? Verbosity::quiet : flags.verbose ? Verbosity::verbose : Verbosity::normal;

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*curve) return cmd_curve(flags);
    if (*experiment) return cmd_experiment(flags);
    if (*bench) return cmd_bench(flags);
    if (*report) return cmd_report(flags);
  } catch (const ConfigError& e) {
    std::cerr << "fairtree " << stage << ": configuration: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "fairtree " << stage << ": configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fairtree " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 2;
}
