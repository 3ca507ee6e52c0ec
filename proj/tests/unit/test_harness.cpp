#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <thread>

#include "fairtree/harness.hpp"

using namespace fairtree;
using namespace std::chrono_literals;

TEST(GammaGrid, Examples) {
  const auto a = gamma_grid(MethodSpec{MethodKind::combined, 0.0, 1.0, 50});
  ASSERT_EQ(a.size(), 50u);
  EXPECT_EQ(a.front(), 0.0);
  EXPECT_EQ(a.back(), 1.0);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_NEAR(a[i] - a[i - 1], 1.0 / 49.0, 1e-15);
  EXPECT_EQ(gamma_grid(MethodSpec::defaults(MethodKind::dtfc)).back(), 0.2);
  EXPECT_EQ(gamma_grid(MethodSpec{MethodKind::two_trees, 0.0, 1.0, 2}), (std::vector<double>{0.0, 1.0}));
  EXPECT_THROW(gamma_grid(MethodSpec{MethodKind::combined, 0.0, 1.0, 1}), Error);
}

TEST(MethodSpec, DefaultsAndValidation) {
  EXPECT_EQ(MethodSpec::defaults(MethodKind::constrained).gamma_max, 0.2);
  EXPECT_EQ(MethodSpec::defaults(MethodKind::two_trees).gamma_max, 1.0);
  EXPECT_EQ(MethodSpec::defaults(MethodKind::combined).gamma_steps, 50u);
  EXPECT_THROW((MethodSpec{MethodKind::combined, 0.0, 1.5, 10}.validate()), Error);
  EXPECT_NO_THROW((MethodSpec{MethodKind::constrained, 0.0, 1.5, 10}.validate()));
  EXPECT_THROW((MethodSpec{MethodKind::dtfc, 0.3, 0.2, 10}.validate()), Error);
  EXPECT_EQ(parse_method("2tft"), MethodKind::two_trees);
  EXPECT_EQ(parse_method("backtracking"), MethodKind::dtfc);
  EXPECT_THROW(parse_method("forest"), Error);
}

TEST(CostOrder, ShallowFirstThenLargerLeaves) {
  const auto cells = cost_ordered(HyperGrid{{13, 4, 8, 6}, {0.01, 0.25, 0.1}});
  ASSERT_EQ(cells.size(), 12u);
  EXPECT_EQ(cells.front(), (GridCell{4, 0.25}));
  EXPECT_EQ(cells[1], (GridCell{4, 0.1}));
  EXPECT_EQ(cells[2], (GridCell{4, 0.01}));
  EXPECT_EQ(cells.back(), (GridCell{13, 0.01}));
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const auto& a = cells[i - 1];
    const auto& b = cells[i];
    EXPECT_TRUE(a.max_depth < b.max_depth || (a.max_depth == b.max_depth && a.min_samples >= b.min_samples));
  }
}

TEST(BudgetedGrid, GenerousBudgetCompletesEverything) {
  const auto r = time_budgeted_grid(12, Seconds(60), [](std::size_t, const Deadline&) { return true; });
  EXPECT_EQ(r.completed.size(), 12u);
  EXPECT_FALSE(r.exhausted);
  const auto unbounded = time_budgeted_grid(5, std::nullopt, [](std::size_t, const Deadline&) { return true; });
  EXPECT_EQ(unbounded.completed.size(), 5u);
}

TEST(BudgetedGrid, TightBudgetLeavesAPrefix) {
  const auto r = time_budgeted_grid(12, Seconds(0.05), [](std::size_t, const Deadline& d) {
    std::this_thread::sleep_for(20ms);
    return !d.expired();
  });
  EXPECT_TRUE(r.exhausted);
  EXPECT_GE(r.completed.size(), 1u);
  EXPECT_LT(r.completed.size(), 12u);
  for (std::size_t i = 0; i < r.completed.size(); ++i) EXPECT_EQ(r.completed[i], i);
}

TEST(BudgetedGrid, NothingCompletedIsAnError) {
  EXPECT_THROW(time_budgeted_grid(3, Seconds(1), [](std::size_t, const Deadline&) { return false; }), Error);
  EXPECT_THROW(time_budgeted_grid(3, Seconds(0), [](std::size_t, const Deadline&) { return true; }), Error);
}

TEST(ParallelFor, CoversEveryIndexAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i]++; });
  EXPECT_TRUE(std::all_of(hit.begin(), hit.end(), [](int v) { return v == 1; }));
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw Error("boom");
                            }),
               Error);
}

TEST(Plan, FoldsNeverTouchTheTestPart) {
  ExperimentConfig cfg;
  cfg.master_seed = 5;
  const auto plans = plan_experiment(301, cfg);
  ASSERT_EQ(plans.size(), 15u);
  for (const auto& p : plans) {
    std::set<std::size_t> test(p.test.begin(), p.test.end());
    std::multiset<std::size_t> validated;
    ASSERT_EQ(p.folds.size(), 3u);
    for (const auto& f : p.folds) {
      for (auto i : f.train) EXPECT_FALSE(test.count(i));
      for (auto i : f.test) EXPECT_FALSE(test.count(i));
      validated.insert(f.test.begin(), f.test.end());
    }
    EXPECT_EQ(validated.size(), p.train.size());
    EXPECT_EQ(std::set<std::size_t>(validated.begin(), validated.end()).size(), p.train.size());
  }
  EXPECT_NE(plans[0].test, plans[1].test);
}

TEST(Summaries, PopulationStd) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
}

namespace {

ExperimentConfig small_config(std::size_t holdouts, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.holdouts = holdouts;
  cfg.master_seed = seed;
  return cfg;
}

}  // namespace

TEST(Experiment, OneCellGridSelectsThatCell) {
  const auto d = synth_biased(300, 0.6, 1);
  const HyperGrid grid{{4}, {0.1}};
  const auto r = run_experiment(d, MethodSpec{MethodKind::two_trees, 0, 1, 10}, grid, small_config(3, 1), "s");
  ASSERT_EQ(r.holdouts.size(), 3u);
  for (const auto& h : r.holdouts) {
    EXPECT_EQ(h.selected, (GridCell{4, 0.1}));
    EXPECT_EQ(h.curve.points.size(), 10u);
  }
  EXPECT_EQ(r.averaged_curve.size(), 10u);
  EXPECT_FALSE(r.budget_exhausted);
}

TEST(Experiment, IdenticalCellsTieToTheFirst) {
  const auto d = synth_biased(300, 0.6, 2);
  const HyperGrid grid{{4, 4}, {0.1}};
  const auto r = run_experiment(d, MethodSpec{MethodKind::combined, 0, 1, 5}, grid, small_config(3, 2));
  ASSERT_EQ(r.completed_cells.size(), 2u);
  for (std::size_t h = 0; h < 3; ++h) EXPECT_EQ(r.inner_autoc[0][h], r.inner_autoc[1][h]);
  for (const auto& h : r.holdouts) EXPECT_EQ(h.inner_autoc, r.inner_autoc[0][h.index]);
}

TEST(Experiment, SelectionConsistencyAndAggregates) {
  const auto d = synth_biased(400, 0.7, 3);
  const HyperGrid grid{{2, 4, 6}, {0.25, 0.01}};
  auto cfg = small_config(4, 3);
  cfg.workers = 2;
  const auto r = run_experiment(d, MethodSpec{MethodKind::constrained, 0, 0.2, 8}, grid, cfg);
  ASSERT_EQ(r.completed_cells.size(), 6u);
  double sum = 0.0;
  for (const auto& h : r.holdouts) {
    for (std::size_t c = 0; c < r.completed_cells.size(); ++c) EXPECT_GE(h.inner_autoc, r.inner_autoc[c][h.index]);
    sum += h.metrics.autoc;
  }
  EXPECT_NEAR(r.aggregate.autoc.mean, sum / 4.0, 1e-12);
  for (std::size_t i = 0; i < r.averaged_curve.size(); ++i) {
    double a = 0.0;
    for (const auto& h : r.holdouts) a += h.curve.points[i].auroc;
    EXPECT_NEAR(r.averaged_curve[i].auroc, a / 4.0, 1e-12);
  }
}

TEST(Experiment, DeterministicAcrossRunsAndWorkers) {
  const auto d = synth_biased(300, 0.5, 4);
  const HyperGrid grid{{3, 5}, {0.1}};
  auto cfg = small_config(3, 9);
  const auto a = run_experiment(d, MethodSpec{MethodKind::dtfc, 0, 0.2, 6}, grid, cfg);
  cfg.workers = 3;
  const auto b = run_experiment(d, MethodSpec{MethodKind::dtfc, 0, 0.2, 6}, grid, cfg);
  ASSERT_EQ(a.holdouts.size(), b.holdouts.size());
  for (std::size_t h = 0; h < a.holdouts.size(); ++h) {
    EXPECT_EQ(a.holdouts[h].curve.points, b.holdouts[h].curve.points);
    EXPECT_EQ(a.holdouts[h].selected, b.holdouts[h].selected);
  }
  EXPECT_EQ(a.inner_autoc, b.inner_autoc);
}

TEST(Experiment, DegenerateDataIsFlagged) {
  auto d = synth_biased(120, 0.5, 5);
  std::vector<std::uint8_t> ones(d.size(), 1);
  const Dataset flat(d.features(), ones, d.s());
  const auto r = run_experiment(flat, MethodSpec{MethodKind::combined, 0, 1, 3}, HyperGrid{{3}, {0.1}},
                                small_config(2, 5));
  EXPECT_TRUE(r.constant_target);
  EXPECT_GT(r.events.single_class_auroc, 0u);
  EXPECT_EQ(r.holdouts.size(), 2u);
}

TEST(Experiment, SynthCombinedAutocIsInRangeAndVaries) {
  const auto d = synth_biased(3000, 0.8, 6);
  const HyperGrid grid{{4, 6}, {0.1, 0.01}};
  const auto r = run_experiment(d, MethodSpec::defaults(MethodKind::combined), grid, small_config(15, 6));
  ASSERT_EQ(r.holdouts.size(), 15u);
  EXPECT_GE(r.aggregate.autoc.mean, 0.0);
  EXPECT_LE(r.aggregate.autoc.mean, 0.5);
  EXPECT_GT(r.aggregate.autoc.std, 0.0);
}

TEST(Benchmark, ValidatesSteps) {
  const auto d = synth_biased(200, 0.5, 7);
  BenchConfig cfg;
  EXPECT_THROW(runtime_benchmark(d, cfg), Error);
  cfg.steps = {0};
  EXPECT_THROW(runtime_benchmark(d, cfg), Error);
  cfg.steps = {500};
  EXPECT_THROW(runtime_benchmark(d, cfg), Error);
  cfg.axis = BenchAxis::features;
  cfg.steps = {6};
  EXPECT_THROW(runtime_benchmark(d, cfg), Error);
  cfg.steps = {2, 5};
  cfg.methods = {MethodKind::two_trees};
  cfg.gamma_steps = 5;
  const auto rows = runtime_benchmark(d, cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].value, 5u);
  EXPECT_GE(rows[1].seconds, 0.0);
  EXPECT_EQ(parse_axis("max_depth"), BenchAxis::max_depth);
  EXPECT_THROW(parse_axis("gammas"), Error);
}

TEST(Benchmark, TwoTreesCostIsFlatInGammaCount) {
  const auto d = synth_biased(1000, 0.7, 8);
  auto time_for = [&](MethodKind m, std::size_t steps) {
    BenchConfig cfg;
    cfg.axis = BenchAxis::instances;
    cfg.steps = {600};
    cfg.base_depth = 6;
    cfg.methods = {m};
    cfg.gamma_steps = steps;
    cfg.repeats = 3;
    return runtime_benchmark(d, cfg).front().seconds;
  };
  const double single_ratio = time_for(MethodKind::combined, 100) / time_for(MethodKind::combined, 10);
  const double dual_ratio = time_for(MethodKind::two_trees, 100) / time_for(MethodKind::two_trees, 10);
  EXPECT_GT(single_ratio, 4.0);
  EXPECT_LT(dual_ratio, single_ratio / 2.0);
}

TEST(Benchmark, DeeperDtfcSearchIsNotCheaper) {
  const auto d = synth_biased(1000, 0.8, 9);
  BenchConfig cfg;
  cfg.axis = BenchAxis::max_depth;
  cfg.steps = {3, 6};
  cfg.methods = {MethodKind::dtfc};
  cfg.repeats = 5;
  cfg.base_instances = 300;
  cfg.base_features = 5;
  const auto rows = runtime_benchmark(d, cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GE(rows[1].seconds, rows[0].seconds);
}
