#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtree/dataset.hpp"
#include "fairtree/error.hpp"

namespace fairtree {

enum class Target { y, s };

/// Binary entropy in bits of a set with `ones` positives out of `total`.
inline double entropy(std::size_t ones, std::size_t total) {
  if (total == 0) throw Error("entropy: empty set");
  if (ones == 0 || ones == total) return 0.0;
  // Smaller class first, so relabeling 0 <-> 1 gives the identical value.
  const std::size_t minor = std::min(ones, total - ones);
  const double p = static_cast<double>(minor) / static_cast<double>(total);
  const double q = static_cast<double>(total - minor) / static_cast<double>(total);
  return -p * std::log2(p) - q * std::log2(q);
}

inline double entropy(std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw Error("entropy: empty label vector");
  std::size_t ones = 0;
  for (auto v : labels) ones += v ? 1 : 0;
  return entropy(ones, labels.size());
}

/// Information gain of a two-way partition given label counts. The gain is
/// exactly zero when both sides keep the parent's label rate (checked in
/// integers, since the floating-point sum need not cancel); negative
/// round-off is clamped to zero.
inline double gain_from_counts(std::size_t n, std::size_t ones, std::size_t n_left, std::size_t ones_left) {
  if (n_left == 0 || n_left >= n) throw Error("info_gain: split leaves a group empty");
  if (ones_left * n == ones * n_left) return 0.0;
  // Children in a fixed order so a mirrored split gives the identical value
  // and exact ties stay exact.
  std::pair<std::size_t, std::size_t> a{n_left, ones_left}, b{n - n_left, ones - ones_left};
  if (b < a) std::swap(a, b);
  const double wa = static_cast<double>(a.first) / static_cast<double>(n);
  const double wb = static_cast<double>(b.first) / static_cast<double>(n);
  const double g = entropy(ones, n) - wa * entropy(a.second, a.first) - wb * entropy(b.second, b.first);
  return g > 0.0 ? g : 0.0;
}

/// Binary columns split on value 0 (left) versus 1; numeric columns on
/// value <= threshold (left) versus greater.
struct Split {
  std::size_t column = 0;
  std::string column_name;
  std::optional<double> threshold;

  bool goes_left(double v) const { return threshold ? v <= *threshold : v == 0.0; }

  friend bool operator==(const Split&, const Split&) = default;
};

struct SplitCandidate {
  Split split;
  double gain_y = 0.0;
  double gain_s = 0.0;
  std::size_t left_count = 0;
  std::size_t right_count = 0;
};

/// Gain of `split` on the given rows, computed directly from the column
/// values.
inline double info_gain(const Dataset& data, std::span<const std::size_t> rows, Target target, const Split& split) {
  const auto& labels = target == Target::y ? data.y() : data.s();
  const auto& values = data.feature(split.column).values;
  std::size_t ones = 0, n_left = 0, ones_left = 0;
  for (auto r : rows) {
    ones += labels[r];
    if (split.goes_left(values[r])) {
      ++n_left;
      ones_left += labels[r];
    }
  }
  return gain_from_counts(rows.size(), ones, n_left, ones_left);
}

/// Tree size limits. `max_depth` counts node levels: a node at depth d (root
/// = 0) may only split when d + 1 < max_depth, so max_depth = 1 is a single
/// leaf. A child needs at least round(n_total * min_samples) rows.
struct GrowthLimits {
  std::size_t max_depth = 4;
  double min_samples = 0.01;
  std::size_t threshold_count = 10;

  void validate() const {
    if (max_depth < 1) throw Error("GrowthLimits: max_depth must be >= 1");
    if (!(min_samples > 0.0 && min_samples <= 1.0)) throw Error("GrowthLimits: min_samples must lie in (0, 1]");
    if (threshold_count < 1) throw Error("GrowthLimits: threshold_count must be >= 1");
  }

  std::size_t min_leaf_rows(std::size_t n_total) const {
    const auto m = std::llround(static_cast<double>(n_total) * min_samples);
    return static_cast<std::size_t>(std::max<long long>(m, 1));
  }

  friend bool operator==(const GrowthLimits&, const GrowthLimits&) = default;
};

struct TreeNode;
using NodePtr = std::shared_ptr<const TreeNode>;

/// Leaf when `split` is empty. Internal nodes keep the training statistics
/// of their subset for inspection.
struct TreeNode {
  std::optional<Split> split;
  NodePtr left;
  NodePtr right;
  double p1 = 0.0;
  std::size_t count = 0;
  double gain_y = 0.0;
  double gain_s = 0.0;

  bool is_leaf() const { return !split.has_value(); }
};

inline NodePtr make_leaf(double p1, std::size_t count) {
  auto n = std::make_shared<TreeNode>();
  n->p1 = p1;
  n->count = count;
  return n;
}

inline NodePtr make_internal(const SplitCandidate& c, NodePtr left, NodePtr right, double p1, std::size_t count) {
  auto n = std::make_shared<TreeNode>();
  n->split = c.split;
  n->left = std::move(left);
  n->right = std::move(right);
  n->p1 = p1;
  n->count = count;
  n->gain_y = c.gain_y;
  n->gain_s = c.gain_s;
  return n;
}

/// A null root is the empty tree: it predicts default_p1 everywhere.
struct Tree {
  NodePtr root;
  double default_p1 = 0.0;
  std::vector<std::string> feature_names;

  bool empty() const { return root == nullptr; }
};

/// Candidate enumeration over subsets of one training set. Numeric
/// thresholds are enumerated once on the whole training set; rows are
/// pre-binned against them so every node costs O(rows * columns).
class SplitSearch {
 public:
  SplitSearch(const Dataset& data, const GrowthLimits& limits)
      : data_(&data), limits_(limits), min_leaf_(limits.min_leaf_rows(data.size())) {
    limits_.validate();
    const auto m = data.feature_count();
    thresholds_.resize(m);
    bins_.resize(m);
    for (std::size_t c = 0; c < m; ++c) {
      const auto& col = data.feature(c);
      if (col.kind != ColumnKind::numeric) continue;
      thresholds_[c] = enumerate_thresholds(col.values, limits_.threshold_count);
      const auto& t = thresholds_[c];
      auto& b = bins_[c];
      b.resize(col.values.size());
      for (std::size_t r = 0; r < col.values.size(); ++r)
        b[r] = static_cast<std::uint32_t>(std::lower_bound(t.begin(), t.end(), col.values[r]) - t.begin());
    }
  }

  const Dataset& data() const { return *data_; }
  const GrowthLimits& limits() const { return limits_; }
  std::size_t n_total() const { return data_->size(); }
  std::size_t min_leaf() const { return min_leaf_; }
  const std::vector<double>& thresholds(std::size_t column) const { return thresholds_.at(column); }

  /// All splits on `rows` whose two children are nonempty and, when
  /// `enforce_min_leaf`, hold at least min_leaf() rows each. Binary columns
  /// flagged in `used` are skipped. Order: column index, then threshold.
  std::vector<SplitCandidate> candidates(std::span<const std::size_t> rows, const std::vector<bool>& used,
                                         bool enforce_min_leaf = true) const {
    std::vector<SplitCandidate> out;
    const auto& y = data_->y();
    const auto& s = data_->s();
    const std::size_t n = rows.size();
    std::size_t ys = 0, ss = 0;
    for (auto r : rows) {
      ys += y[r];
      ss += s[r];
    }
    const std::size_t floor = enforce_min_leaf ? std::max<std::size_t>(min_leaf_, 1) : 1;
    auto consider = [&](std::size_t c, std::optional<double> thr, std::size_t nl, std::size_t yl, std::size_t sl) {
      if (nl < floor || n - nl < floor) return;
      SplitCandidate cand;
      cand.split = Split{c, data_->feature(c).name, thr};
      cand.gain_y = gain_from_counts(n, ys, nl, yl);
      cand.gain_s = gain_from_counts(n, ss, nl, sl);
      cand.left_count = nl;
      cand.right_count = n - nl;
      out.push_back(std::move(cand));
    };

    for (std::size_t c = 0; c < data_->feature_count(); ++c) {
      const auto& col = data_->feature(c);
      if (col.kind == ColumnKind::binary) {
        if (c < used.size() && used[c]) continue;
        std::size_t nl = 0, yl = 0, sl = 0;
        for (auto r : rows) {
          if (col.values[r] == 0.0) {
            ++nl;
            yl += y[r];
            sl += s[r];
          }
        }
        consider(c, std::nullopt, nl, yl, sl);
        continue;
      }
      const auto& t = thresholds_[c];
      if (t.empty()) continue;
      hist_.assign(3 * (t.size() + 1), 0);
      const auto& b = bins_[c];
      for (auto r : rows) {
        const std::size_t k = 3 * b[r];
        hist_[k] += 1;
        hist_[k + 1] += y[r];
        hist_[k + 2] += s[r];
      }
      std::size_t nl = 0, yl = 0, sl = 0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        nl += hist_[3 * k];
        yl += hist_[3 * k + 1];
        sl += hist_[3 * k + 2];
        consider(c, t[k], nl, yl, sl);
      }
    }
    return out;
  }

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(std::span<const std::size_t> rows,
                                                                          const Split& split) const {
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    const auto& values = data_->feature(split.column).values;
    for (auto r : rows) (split.goes_left(values[r]) ? out.first : out.second).push_back(r);
    return out;
  }

  double positive_rate(std::span<const std::size_t> rows) const {
    std::size_t ones = 0;
    for (auto r : rows) ones += data_->y()[r];
    return rows.empty() ? 0.0 : static_cast<double>(ones) / static_cast<double>(rows.size());
  }

  NodePtr leaf(std::span<const std::size_t> rows) const { return make_leaf(positive_rate(rows), rows.size()); }

 private:
  const Dataset* data_;
  GrowthLimits limits_;
  std::size_t min_leaf_;
  std::vector<std::vector<double>> thresholds_;
  std::vector<std::vector<std::uint32_t>> bins_;
  mutable std::vector<std::size_t> hist_;
};

/// A split-selection policy maps the admissible candidates of a node to the
/// index of the chosen one, or nullopt to make the node a leaf.
template <class P>
concept SplitPolicy = requires(const P& p, std::span<const SplitCandidate> c) {
  { p(c) } -> std::convertible_to<std::optional<std::size_t>>;
};

/// Greedy top-down growth. `used` flags binary columns already tested on the
/// current path and is restored before returning.
template <SplitPolicy Policy>
NodePtr grow(const SplitSearch& search, std::span<const std::size_t> rows, std::vector<bool>& used,
             const Policy& policy, std::size_t depth) {
  if (rows.empty()) throw Error("grow: empty subset");
  if (depth + 1 >= search.limits().max_depth) return search.leaf(rows);
  const auto cands = search.candidates(rows, used);
  if (cands.empty()) return search.leaf(rows);
  const auto pick = policy(std::span<const SplitCandidate>(cands));
  if (!pick) return search.leaf(rows);
  const auto& chosen = cands.at(*pick);
  auto [left_rows, right_rows] = search.partition(rows, chosen.split);
  const auto col = chosen.split.column;
  const bool binary = search.data().feature(col).kind == ColumnKind::binary;
  if (binary) used[col] = true;
  auto left = grow(search, left_rows, used, policy, depth + 1);
  auto right = grow(search, right_rows, used, policy, depth + 1);
  if (binary) used[col] = false;
  return make_internal(chosen, std::move(left), std::move(right), search.positive_rate(rows), rows.size());
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

template <SplitPolicy Policy>
Tree train_tree(const Dataset& data, const Policy& policy, const GrowthLimits& limits) {
  if (data.size() == 0) throw Error("train_tree: empty dataset");
  SplitSearch search(data, limits);
  std::vector<bool> used(data.feature_count(), false);
  const auto rows = all_rows(data.size());
  return Tree{grow(search, rows, used, policy, 0), data.prior(), data.feature_names()};
}

// ---------------------------------------------------------------------------
// Prediction

/// `row` is indexed like tree.feature_names.
inline double predict_proba(const Tree& tree, std::span<const double> row) {
  const TreeNode* node = tree.root.get();
  if (node == nullptr) return tree.default_p1;
  while (!node->is_leaf()) {
    const auto& sp = *node->split;
    if (sp.column >= row.size()) throw Error("predict: row lacks column '" + sp.column_name + "'");
    node = sp.goes_left(row[sp.column]) ? node->left.get() : node->right.get();
  }
  return node->p1;
}

/// Ties at the threshold go to class 1.
inline int predict(const Tree& tree, std::span<const double> row, double threshold = 0.5) {
  return predict_proba(tree, row) >= threshold ? 1 : 0;
}

namespace detail {

// Column of `data` for every tree feature referenced by a split; throws when
// a referenced feature is absent.
inline std::vector<std::optional<std::size_t>> column_map(const Tree& tree, const Dataset& data) {
  std::vector<std::optional<std::size_t>> map(tree.feature_names.size());
  for (std::size_t i = 0; i < tree.feature_names.size(); ++i) map[i] = data.find_feature(tree.feature_names[i]);
  std::function<void(const TreeNode*)> check = [&](const TreeNode* n) {
    if (n == nullptr || n->is_leaf()) return;
    if (n->split->column >= map.size() || !map[n->split->column])
      throw Error("predict: dataset lacks column '" + n->split->column_name + "'");
    check(n->left.get());
    check(n->right.get());
  };
  check(tree.root.get());
  return map;
}

}  // namespace detail

/// Probabilities for every row of `data`, matching columns by name.
inline std::vector<double> predict_proba(const Tree& tree, const Dataset& data) {
  std::vector<double> out(data.size(), tree.default_p1);
  if (tree.empty()) return out;
  const auto map = detail::column_map(tree, data);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const TreeNode* node = tree.root.get();
    while (!node->is_leaf()) {
      const auto& sp = *node->split;
      const double v = data.feature(*map[sp.column]).values[r];
      node = sp.goes_left(v) ? node->left.get() : node->right.get();
    }
    out[r] = node->p1;
  }
  return out;
}

inline std::vector<int> to_labels(std::span<const double> proba, double threshold = 0.5) {
  std::vector<int> out(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) out[i] = proba[i] >= threshold ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Structure queries

inline std::size_t node_depth(const TreeNode* n) {
  if (n == nullptr || n->is_leaf()) return 0;
  return 1 + std::max(node_depth(n->left.get()), node_depth(n->right.get()));
}

// Number of splits on the longest root-to-leaf path; 0 for leaf-only and
// empty trees.
inline std::size_t depth(const Tree& t) { return node_depth(t.root.get()); }

inline std::size_t leaf_count(const TreeNode* n) {
  if (n == nullptr) return 0;
  if (n->is_leaf()) return 1;
  return leaf_count(n->left.get()) + leaf_count(n->right.get());
}

/// Visits nodes in pre-order with their depth.
inline void for_each_node(const TreeNode* n, const std::function<void(const TreeNode&, std::size_t)>& fn,
                          std::size_t depth = 0) {
  if (n == nullptr) return;
  fn(*n, depth);
  if (!n->is_leaf()) {
    for_each_node(n->left.get(), fn, depth + 1);
    for_each_node(n->right.get(), fn, depth + 1);
  }
}

/// Structural equality: same splits, same leaf estimates and counts.
inline bool same_nodes(const TreeNode* a, const TreeNode* b) {
  if (a == nullptr || b == nullptr) return a == b;
  if (a->is_leaf() != b->is_leaf() || a->count != b->count || a->p1 != b->p1) return false;
  if (a->is_leaf()) return true;
  return *a->split == *b->split && same_nodes(a->left.get(), b->left.get()) &&
         same_nodes(a->right.get(), b->right.get());
}

inline bool same_tree(const Tree& a, const Tree& b) {
  return a.default_p1 == b.default_p1 && same_nodes(a.root.get(), b.root.get());
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline void dump_text(const TreeNode* n, std::ostringstream& out, int indent, const char* label) {
  out << std::string(static_cast<std::size_t>(indent) * 2, ' ') << label;
  if (n->is_leaf()) {
    out << "leaf p1=" << format_number(n->p1) << " n=" << n->count << '\n';
    return;
  }
  const auto& sp = *n->split;
  out << '[' << sp.column_name;
  if (sp.threshold) out << " <= " << format_number(*sp.threshold);
  else out << " == 0";
  out << "] n=" << n->count << " p1=" << format_number(n->p1) << " gain_y=" << format_number(n->gain_y)
      << " gain_s=" << format_number(n->gain_s) << '\n';
  dump_text(n->left.get(), out, indent + 1, "yes: ");
  dump_text(n->right.get(), out, indent + 1, "no:  ");
}

inline nlohmann::json node_to_json(const TreeNode* n) {
  nlohmann::json j;
  j["p1"] = n->p1;
  j["count"] = n->count;
  if (n->is_leaf()) {
    j["leaf"] = true;
    return j;
  }
  const auto& sp = *n->split;
  j["column"] = sp.column_name;
  j["threshold"] = sp.threshold ? nlohmann::json(*sp.threshold) : nlohmann::json(nullptr);
  j["gain_y"] = n->gain_y;
  j["gain_s"] = n->gain_s;
  j["left"] = node_to_json(n->left.get());
  j["right"] = node_to_json(n->right.get());
  return j;
}

inline NodePtr node_from_json(const nlohmann::json& j, const std::vector<std::string>& features) {
  auto n = std::make_shared<TreeNode>();
  n->p1 = j.at("p1").get<double>();
  n->count = j.at("count").get<std::size_t>();
  if (j.value("leaf", false)) return n;
  const auto name = j.at("column").get<std::string>();
  auto it = std::find(features.begin(), features.end(), name);
  if (it == features.end()) throw Error("tree json: unknown column '" + name + "'");
  Split sp{static_cast<std::size_t>(it - features.begin()), name, std::nullopt};
  if (!j.at("threshold").is_null()) sp.threshold = j.at("threshold").get<double>();
  n->split = std::move(sp);
  n->gain_y = j.value("gain_y", 0.0);
  n->gain_s = j.value("gain_s", 0.0);
  n->left = node_from_json(j.at("left"), features);
  n->right = node_from_json(j.at("right"), features);
  return n;
}

}  // namespace detail

/// Indented human-readable dump; "yes" branches hold rows passing the test.
inline std::string to_text(const Tree& tree) {
  std::ostringstream out;
  if (tree.empty()) {
    out << "empty tree p1=" << format_number(tree.default_p1) << '\n';
    return out.str();
  }
  detail::dump_text(tree.root.get(), out, 0, "");
  return out.str();
}

inline nlohmann::json to_json(const Tree& tree) {
  nlohmann::json j;
  j["default_p1"] = tree.default_p1;
  j["features"] = tree.feature_names;
  j["root"] = tree.empty() ? nlohmann::json(nullptr) : detail::node_to_json(tree.root.get());
  return j;
}

inline Tree tree_from_json(const nlohmann::json& j) {
  Tree t;
  t.default_p1 = j.at("default_p1").get<double>();
  t.feature_names = j.at("features").get<std::vector<std::string>>();
  if (!j.at("root").is_null()) t.root = detail::node_from_json(j.at("root"), t.feature_names);
  return t;
}

}  // namespace fairtree
