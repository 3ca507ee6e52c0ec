#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fairtree/error.hpp"
#include "fairtree/tree.hpp"

namespace fairtree {

using Clock = std::chrono::steady_clock;

/// Optional wall-clock limit shared by a search.
class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(std::chrono::duration<double> budget)
      : at_(Clock::now() + std::chrono::duration_cast<Clock::duration>(budget)) {}

  static Deadline at(Clock::time_point t) {
    Deadline d;
    d.at_ = t;
    return d;
  }

  bool expired() const { return at_ && Clock::now() >= *at_; }
  bool bounded() const { return at_.has_value(); }

 private:
  std::optional<Clock::time_point> at_;
};

struct DtfcStats {
  std::size_t nodes_visited = 0;
  std::size_t backtracks = 0;
  bool timed_out = false;
};

namespace detail {

struct DtfcSearch {
  const SplitSearch& search;
  double gamma;
  Deadline deadline;
  DtfcStats stats;
};

}  // namespace detail

/// Backtracking construction of a node on `rows` at `depth` (root = 0).
/// Returns nullptr when no split of this subset satisfies gain_s <= gamma
/// and leads to a valid subtree, telling the caller to try its next
/// candidate.
///
/// The available set is the admissible candidates (child-size rule applied,
/// binary columns unused on the path). Among those with gain_s <= gamma the
/// search tries candidates by decreasing gain_y. A candidate whose children
/// would reach max_depth makes this node a leaf; a child that comes back
/// null abandons the candidate. Once all valid candidates have zero gain_y
/// the node is a leaf, like the greedy constrained policy.
inline NodePtr dtfc_build(detail::DtfcSearch& ctx, std::span<const std::size_t> rows, std::vector<bool>& used,
                          std::size_t depth) {
  if (rows.empty()) throw Error("dtfc_build: empty subset");
  ++ctx.stats.nodes_visited;
  if (ctx.stats.timed_out || ctx.deadline.expired()) {
    ctx.stats.timed_out = true;
    return nullptr;
  }
  const auto& search = ctx.search;
  auto available = search.candidates(rows, used);
  if (available.empty()) return search.leaf(rows);

  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < available.size(); ++i)
    if (available[i].gain_s <= ctx.gamma) valid.push_back(i);
  if (valid.empty()) return nullptr;

  // Every valid candidate fails the depth test identically: the first one
  // tried already turns this node into a leaf.
  if (depth + 1 >= search.limits().max_depth) return search.leaf(rows);

  std::erase_if(valid, [&](std::size_t i) { return available[i].gain_y <= 0.0; });
  if (valid.empty()) return search.leaf(rows);
  std::stable_sort(valid.begin(), valid.end(),
                   [&](std::size_t a, std::size_t b) { return available[a].gain_y > available[b].gain_y; });

  const double p1 = search.positive_rate(rows);
  for (auto i : valid) {
    const auto& cand = available[i];
    auto [left_rows, right_rows] = search.partition(rows, cand.split);
    const auto col = cand.split.column;
    const bool binary = search.data().feature(col).kind == ColumnKind::binary;
    if (binary) used[col] = true;
    NodePtr left = dtfc_build(ctx, left_rows, used, depth + 1);
    NodePtr right = left ? dtfc_build(ctx, right_rows, used, depth + 1) : nullptr;
    if (binary) used[col] = false;
    if (ctx.stats.timed_out) return nullptr;
    if (left && right) return make_internal(cand, std::move(left), std::move(right), p1, rows.size());
    ++ctx.stats.backtracks;
  }
  return nullptr;
}

struct DtfcResult {
  Tree tree;
  DtfcStats stats;

  bool timed_out() const { return stats.timed_out; }
};

/// Trains a fairness-constrained tree with backtracking. A null root (no
/// feasible structure, or the budget ran out) yields the empty tree, which
/// predicts the training prior.
inline DtfcResult dtfc_train(const Dataset& data, double gamma, const GrowthLimits& limits,
                             Deadline deadline = {}) {
  if (data.size() == 0) throw Error("dtfc_train: empty dataset");
  if (!(gamma >= 0.0)) throw Error("dtfc_train: gamma must be >= 0");
  SplitSearch search(data, limits);
  detail::DtfcSearch ctx{search, gamma, deadline, {}};
  std::vector<bool> used(data.feature_count(), false);
  const auto rows = all_rows(data.size());
  NodePtr root = dtfc_build(ctx, rows, used, 0);
  if (ctx.stats.timed_out) root = nullptr;
  return {Tree{std::move(root), data.prior(), data.feature_names()}, ctx.stats};
}

inline DtfcResult dtfc_train(const Dataset& data, double gamma, const GrowthLimits& limits,
                             std::optional<std::chrono::duration<double>> budget) {
  return dtfc_train(data, gamma, limits, budget ? Deadline(*budget) : Deadline{});
}

}  // namespace fairtree
