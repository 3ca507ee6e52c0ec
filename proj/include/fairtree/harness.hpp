#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fairtree/curve.hpp"
#include "fairtree/dataset.hpp"
#include "fairtree/error.hpp"
#include "fairtree/metrics.hpp"
#include "fairtree/sampling.hpp"

namespace fairtree {

using Seconds = std::chrono::duration<double>;

struct MethodSpec {
  MethodKind kind = MethodKind::combined;
  double gamma_min = 0.0;
  double gamma_max = 1.0;
  std::size_t gamma_steps = 50;

  /// Soft trade-offs sweep [0, 1]; hard constraints on gain_s sweep [0, 0.2].
  static MethodSpec defaults(MethodKind kind) {
    const bool hard = kind == MethodKind::constrained || kind == MethodKind::dtfc;
    return {kind, 0.0, hard ? 0.2 : 1.0, 50};
  }

  void validate() const {
    if (gamma_steps < 2) throw Error("method '" + std::string(to_string(kind)) + "': gamma_steps must be >= 2");
    if (!(gamma_min < gamma_max)) throw Error("method: gamma range must be increasing");
    if (gamma_min < 0.0) throw Error("method: gamma must be >= 0");
    if ((kind == MethodKind::combined || kind == MethodKind::two_trees) && gamma_max > 1.0)
      throw Error("method '" + std::string(to_string(kind)) + "': gamma must not exceed 1");
  }
};

/// Inclusive linear spacing over the method's gamma range.
inline std::vector<double> gamma_grid(const MethodSpec& m) {
  if (m.gamma_steps < 2) throw Error("gamma_grid: gamma_steps must be >= 2");
  std::vector<double> out(m.gamma_steps);
  const double span = m.gamma_max - m.gamma_min;
  const double last = static_cast<double>(m.gamma_steps - 1);
  for (std::size_t i = 0; i < m.gamma_steps; ++i)
    out[i] = m.gamma_min + span * static_cast<double>(i) / last;
  out.back() = m.gamma_max;
  return out;
}

struct GridCell {
  std::size_t max_depth = 4;
  double min_samples = 0.1;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct HyperGrid {
  std::vector<std::size_t> max_depths{4, 6, 8, 13};
  std::vector<double> min_samples{0.25, 0.1, 0.01};

  void validate() const {
    if (max_depths.empty() || min_samples.empty()) throw Error("grid: lists must be nonempty");
  }

  /// Cells in listing order: max_depths outer, min_samples inner.
  std::vector<GridCell> cells() const {
    std::vector<GridCell> out;
    for (auto d : max_depths)
      for (auto m : min_samples) out.push_back({d, m});
    return out;
  }
};

/// Cheapest first: ascending max_depth, then descending min_samples. Stable,
/// so duplicate cells keep their listing order.
inline std::vector<GridCell> cost_ordered(const HyperGrid& grid) {
  auto cells = grid.cells();
  std::stable_sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) {
    if (a.max_depth != b.max_depth) return a.max_depth < b.max_depth;
    return a.min_samples > b.min_samples;
  });
  return cells;
}

struct BudgetedGrid {
  std::vector<std::size_t> completed;  // indices into the cell list
  bool exhausted = false;
};

/// Evaluates cells in order until the budget runs out. `evaluate(index,
/// deadline)` returns false when it was interrupted; that cell and all later
/// ones are skipped. Throws when no cell completed.
template <class Evaluate>
BudgetedGrid time_budgeted_grid(std::size_t cell_count, std::optional<Seconds> budget, Evaluate&& evaluate) {
  if (budget && !(budget->count() > 0.0)) throw Error("time budget must be positive");
  const Deadline deadline = budget ? Deadline(*budget) : Deadline{};
  BudgetedGrid out;
  for (std::size_t i = 0; i < cell_count; ++i) {
    if (deadline.expired() || !evaluate(i, deadline)) {
      out.exhausted = true;
      break;
    }
    out.completed.push_back(i);
  }
  if (out.completed.empty())
    throw Error("time budget too small: no hyperparameter combination completed; raise the budget");
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
/// exception is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct ExperimentConfig {
  std::size_t holdouts = 15;
  std::size_t folds = 3;
  double train_fraction = 2.0 / 3.0;
  std::uint64_t master_seed = 0;
  std::optional<Seconds> budget;
  std::size_t workers = 1;
  std::size_t threshold_count = 10;

  void validate() const {
    if (holdouts < 1) throw Error("experiment: holdouts must be >= 1");
    if (folds < 2) throw Error("experiment: folds must be >= 2");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("experiment: train_fraction must lie in (0, 1)");
    if (budget && !(budget->count() > 0.0)) throw Error("experiment: budget must be positive");
    if (threshold_count < 1) throw Error("experiment: threshold_count must be >= 1");
  }
};

/// Row indices (into the full dataset) used by one hold-out.
struct HoldoutPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<SplitIndices> folds;  // train/validation, as full-dataset indices
};

/// Hold-out h uses seed derive_seed(master, 1, h) for its split and
/// derive_seed(master, 2, h) for its inner folds.
inline std::vector<HoldoutPlan> plan_experiment(std::size_t n, const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<HoldoutPlan> plans;
  for (std::size_t h = 0; h < cfg.holdouts; ++h) {
    auto split = holdout_indices(n, cfg.train_fraction, derive_seed(cfg.master_seed, 1, h));
    HoldoutPlan p{std::move(split.train), std::move(split.test), {}};
    for (auto& f : k_fold_indices(p.train.size(), cfg.folds, derive_seed(cfg.master_seed, 2, h))) {
      SplitIndices mapped;
      for (auto i : f.train) mapped.train.push_back(p.train[i]);
      for (auto i : f.test) mapped.test.push_back(p.train[i]);
      p.folds.push_back(std::move(mapped));
    }
    plans.push_back(std::move(p));
  }
  return plans;
}

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

inline MetricSummary summarize(std::span<const double> v) {
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

struct HoldoutResult {
  std::size_t index = 0;
  GridCell selected;
  double inner_autoc = 0.0;
  TradeoffCurve curve;
  CurveMetrics metrics;
  CurveEvents events;
};

struct AggregateMetrics {
  MetricSummary autoc, n_pareto, n_unique, n_unique_pareto, var_pairwise;
};

struct HoldoutReport {
  std::string dataset;
  MethodSpec method;
  ExperimentConfig config;
  std::vector<GridCell> completed_cells;
  std::vector<std::vector<double>> inner_autoc;  // [cell][holdout]
  bool budget_exhausted = false;
  std::vector<HoldoutResult> holdouts;
  AggregateMetrics aggregate;
  std::vector<TradeoffPoint> averaged_curve;
  CurveEvents events;
  bool constant_target = false;
  bool constant_sensitive = false;
  double seconds = 0.0;
};

inline AggregateMetrics aggregate_metrics(std::span<const HoldoutResult> results) {
  std::vector<double> a, p, u, up, v;
  for (const auto& r : results) {
    a.push_back(r.metrics.autoc);
    p.push_back(static_cast<double>(r.metrics.n_pareto));
    u.push_back(static_cast<double>(r.metrics.n_unique));
    up.push_back(static_cast<double>(r.metrics.n_unique_pareto));
    v.push_back(r.metrics.var_pairwise);
  }
  return {summarize(a), summarize(p), summarize(u), summarize(up), summarize(v)};
}

/// Pointwise mean over curves sharing one gamma grid.
inline std::vector<TradeoffPoint> average_curves(std::span<const TradeoffCurve> curves) {
  if (curves.empty()) return {};
  const auto m = curves.front().points.size();
  std::vector<TradeoffPoint> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    double a = 0.0, s = 0.0;
    for (const auto& c : curves) {
      if (c.points.size() != m || c.points[i].gamma != curves.front().points[i].gamma)
        throw Error("average_curves: curves do not share a gamma grid");
      a += c.points[i].auroc;
      s += c.points[i].spd;
    }
    const double n = static_cast<double>(curves.size());
    out[i] = {curves.front().points[i].gamma, a / n, s / n};
  }
  return out;
}

/// Repeated hold-out evaluation with inner cross-validated selection of
/// (max_depth, min_samples) by mean AUTOC.
///
/// Cells are visited in the given order (cost_ordered for a HyperGrid), and
/// a budget cut keeps a prefix. A cell is evaluated on every inner fold
/// of every hold-out before the next cell starts, so a budget cut leaves
/// the same completed cells for all hold-outs. Each hold-out then retrains
/// its best completed cell on its full training part and is scored on its
/// test part.
inline HoldoutReport run_experiment(const Dataset& data, const MethodSpec& method, const std::vector<GridCell>& cells,
                                    const ExperimentConfig& cfg, std::string dataset_name = "") {
  method.validate();
  if (cells.empty()) throw Error("experiment: no grid cells");
  cfg.validate();
  const auto started = Clock::now();

  HoldoutReport report;
  report.dataset = std::move(dataset_name);
  report.method = method;
  report.config = cfg;
  report.constant_target = data.constant_target();
  report.constant_sensitive = data.constant_sensitive();

  const auto gammas = gamma_grid(method);
  const auto plans = plan_experiment(data.size(), cfg);
  struct Parts {
    Dataset train, test;
    std::vector<std::pair<Dataset, Dataset>> folds;
  };
  std::vector<Parts> parts;
  for (const auto& p : plans) {
    Parts part{data.subset(p.train), data.subset(p.test), {}};
    for (const auto& f : p.folds) part.folds.emplace_back(data.subset(f.train), data.subset(f.test));
    parts.push_back(std::move(part));
  }

  std::vector<std::vector<double>> scores(cells.size(), std::vector<double>(cfg.holdouts, 0.0));
  CurveEvents inner_events;
  std::mutex events_mutex;

  const auto budgeted = time_budgeted_grid(cells.size(), cfg.budget, [&](std::size_t c, const Deadline& deadline) {
    const GrowthLimits limits{cells[c].max_depth, cells[c].min_samples, cfg.threshold_count};
    std::atomic<bool> interrupted{false};
    parallel_for(cfg.holdouts, cfg.workers, [&](std::size_t h) {
      double sum = 0.0;
      for (const auto& [fold_train, fold_val] : parts[h].folds) {
        if (interrupted) return;
        auto r = build_curve(method.kind, fold_train, fold_val, gammas, limits, deadline);
        if (r.timed_out) {
          interrupted = true;
          return;
        }
        sum += autoc(r.curve.points);
        std::lock_guard lock(events_mutex);
        inner_events += r.events;
      }
      scores[c][h] = sum / static_cast<double>(parts[h].folds.size());
    });
    return !interrupted;
  });
  report.budget_exhausted = budgeted.exhausted;
  for (auto c : budgeted.completed) {
    report.completed_cells.push_back(cells[c]);
    report.inner_autoc.push_back(scores[c]);
  }

  report.holdouts.resize(cfg.holdouts);
  parallel_for(cfg.holdouts, cfg.workers, [&](std::size_t h) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < report.completed_cells.size(); ++c)
      if (report.inner_autoc[c][h] > report.inner_autoc[best][h]) best = c;
    const auto cell = report.completed_cells[best];
    const GrowthLimits limits{cell.max_depth, cell.min_samples, cfg.threshold_count};
    auto r = build_curve(method.kind, parts[h].train, parts[h].test, gammas, limits);
    HoldoutResult out;
    out.index = h;
    out.selected = cell;
    out.inner_autoc = report.inner_autoc[best][h];
    out.metrics = evaluate_curve(r.curve);
    out.curve = std::move(r.curve);
    out.events = r.events;
    report.holdouts[h] = std::move(out);
  });

  report.events = inner_events;
  std::vector<TradeoffCurve> curves;
  for (const auto& h : report.holdouts) {
    report.events += h.events;
    curves.push_back(h.curve);
  }
  report.aggregate = aggregate_metrics(report.holdouts);
  report.averaged_curve = average_curves(curves);
  report.seconds = Seconds(Clock::now() - started).count();
  return report;
}

/// Same, over the full grid in cost order.
inline HoldoutReport run_experiment(const Dataset& data, const MethodSpec& method, const HyperGrid& grid,
                                    const ExperimentConfig& cfg, std::string dataset_name = "") {
  grid.validate();
  return run_experiment(data, method, cost_ordered(grid), cfg, std::move(dataset_name));
}

// ---------------------------------------------------------------------------
// Runtime benchmark

enum class BenchAxis { instances, max_depth, features };

inline std::string_view to_string(BenchAxis a) {
  switch (a) {
    case BenchAxis::instances: return "instances";
    case BenchAxis::max_depth: return "max_depth";
    case BenchAxis::features: return "features";
  }
  return "?";
}

inline BenchAxis parse_axis(std::string_view s) {
  if (s == "instances") return BenchAxis::instances;
  if (s == "max_depth") return BenchAxis::max_depth;
  if (s == "features") return BenchAxis::features;
  throw Error("unknown benchmark axis '" + std::string(s) + "'");
}

struct BenchConfig {
  BenchAxis axis = BenchAxis::instances;
  std::vector<std::size_t> steps;
  std::vector<MethodKind> methods{std::begin(all_methods), std::end(all_methods)};
  std::size_t base_instances = 100;
  std::size_t base_depth = 3;
  std::size_t base_features = 3;
  std::size_t gamma_steps = 50;
  double min_samples = 0.01;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
};

struct BenchRow {
  MethodKind method;
  std::size_t value = 0;
  double seconds = 0.0;
};

/// Times one full trade-off curve per (method, step). The axis parameter
/// takes each step value while the other two stay at their base values. Rows
/// are a seeded sample of the dataset, features its leading columns; the
/// curve is trained on 2/3 of the sample and scored on the rest. Reports the
/// median over `repeats` runs.
inline std::vector<BenchRow> runtime_benchmark(const Dataset& data, const BenchConfig& cfg) {
  if (cfg.steps.empty()) throw Error("bench: no steps given");
  if (cfg.methods.empty()) throw Error("bench: no methods given");
  if (cfg.repeats < 1) throw Error("bench: repeats must be >= 1");
  for (auto v : cfg.steps) {
    if (v == 0) throw Error("bench: step values must be positive");
    if (cfg.axis == BenchAxis::instances && v > data.size())
      throw Error("bench: step " + std::to_string(v) + " exceeds dataset size");
    if (cfg.axis == BenchAxis::features && v > data.feature_count())
      throw Error("bench: step " + std::to_string(v) + " exceeds feature count");
  }
  if (cfg.axis != BenchAxis::instances && cfg.base_instances > data.size())
    throw Error("bench: base instance count exceeds dataset size");
  if (cfg.axis != BenchAxis::features && cfg.base_features > data.feature_count())
    throw Error("bench: base feature count exceeds feature count");

  const auto order = permutation(data.size(), cfg.seed);
  std::vector<BenchRow> rows;
  for (auto method : cfg.methods) {
    auto spec = MethodSpec::defaults(method);
    spec.gamma_steps = cfg.gamma_steps;
    const auto gammas = gamma_grid(spec);
    for (auto v : cfg.steps) {
      const std::size_t n = cfg.axis == BenchAxis::instances ? v : cfg.base_instances;
      const std::size_t depth = cfg.axis == BenchAxis::max_depth ? v : cfg.base_depth;
      const std::size_t width = cfg.axis == BenchAxis::features ? v : cfg.base_features;
      if (n < 3) throw Error("bench: need at least 3 instances");
      std::vector<std::size_t> sample(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
      std::vector<std::size_t> cols(width);
      std::iota(cols.begin(), cols.end(), std::size_t{0});
      const auto subset = data.subset(sample).select_features(cols);
      const auto [train, test] = holdout_split(subset, 2.0 / 3.0, cfg.seed);
      const GrowthLimits limits{depth, cfg.min_samples, 10};
      std::vector<double> times;
      for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const auto t0 = Clock::now();
        (void)build_curve(method, train, test, gammas, limits);
        times.push_back(Seconds(Clock::now() - t0).count());
      }
      std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
      rows.push_back({method, v, times[times.size() / 2]});
    }
  }
  return rows;
}

}  // namespace fairtree
