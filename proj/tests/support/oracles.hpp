#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's gain, candidate, metric or search
// code; only the Dataset container and the Rng are shared.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fairtree/dataset.hpp"
#include "fairtree/metrics.hpp"
#include "fairtree/sampling.hpp"
#include "fairtree/tree.hpp"

namespace oracle {

using fairtree::ColumnKind;
using fairtree::Dataset;

inline double H(std::size_t ones, std::size_t n) {
  if (ones == 0 || ones == n) return 0.0;
  const std::size_t m = std::min(ones, n - ones);
  const double p = static_cast<double>(m) / static_cast<double>(n);
  const double q = static_cast<double>(n - m) / static_cast<double>(n);
  return -p * std::log2(p) - q * std::log2(q);
}

/// Gain of a two-group partition computed from explicit label lists.
inline double gain(const std::vector<std::uint8_t>& left, const std::vector<std::uint8_t>& right) {
  std::size_t ol = 0, orr = 0;
  for (auto v : left) ol += v;
  for (auto v : right) orr += v;
  const std::size_t nl = left.size(), nr = right.size(), n = nl + nr, o = ol + orr;
  // Equal label rates on both sides: zero by strict concavity of H.
  if (ol * n == o * nl) return 0.0;
  // Mirrored partitions must tie exactly, so sum the children in a fixed order.
  auto term = [&](std::size_t k, std::size_t ones) { return static_cast<double>(k) / static_cast<double>(n) * H(ones, k); };
  const bool swap = std::pair(nr, orr) < std::pair(nl, ol);
  const double g = swap ? H(o, n) - term(nr, orr) - term(nl, ol) : H(o, n) - term(nl, ol) - term(nr, orr);
  return std::max(g, 0.0);
}

inline std::vector<double> thresholds(const std::vector<double>& v, std::size_t k) {
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  std::vector<double> t;
  if (lo == hi) return t;
  for (std::size_t i = 1; i <= k; ++i)
    t.push_back(lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(k + 1));
  return t;
}

struct Candidate {
  std::size_t column = 0;
  std::optional<double> threshold;
  double gain_y = 0.0;
  double gain_s = 0.0;
  std::vector<std::size_t> left, right;
};

struct Context {
  const Dataset* data;
  std::size_t max_depth;
  std::size_t min_leaf;
  std::vector<std::vector<double>> thr;

  Context(const Dataset& d, std::size_t max_depth_, double min_samples, std::size_t k = 10)
      : data(&d), max_depth(max_depth_) {
    const double m = std::round(static_cast<double>(d.size()) * min_samples);
    min_leaf = m < 1.0 ? 1 : static_cast<std::size_t>(m);
    for (std::size_t c = 0; c < d.feature_count(); ++c)
      thr.push_back(d.feature(c).kind == ColumnKind::numeric ? thresholds(d.feature(c).values, k)
                                                             : std::vector<double>{});
  }

  /// Every admissible split by brute force, in (column, threshold) order.
  std::vector<Candidate> candidates(const std::vector<std::size_t>& rows, const std::set<std::size_t>& used) const {
    std::vector<Candidate> out;
    auto try_split = [&](std::size_t c, std::optional<double> t) {
      Candidate cand{c, t, 0, 0, {}, {}};
      const auto& v = data->feature(c).values;
      for (auto r : rows) {
        const bool left = t ? v[r] <= *t : v[r] == 0.0;
        (left ? cand.left : cand.right).push_back(r);
      }
      if (cand.left.size() < min_leaf || cand.right.size() < min_leaf) return;
      std::vector<std::uint8_t> yl, yr, sl, sr;
      for (auto r : cand.left) {
        yl.push_back(data->y()[r]);
        sl.push_back(data->s()[r]);
      }
      for (auto r : cand.right) {
        yr.push_back(data->y()[r]);
        sr.push_back(data->s()[r]);
      }
      cand.gain_y = gain(yl, yr);
      cand.gain_s = gain(sl, sr);
      out.push_back(std::move(cand));
    };
    for (std::size_t c = 0; c < data->feature_count(); ++c) {
      if (data->feature(c).kind == ColumnKind::binary) {
        if (!used.count(c)) try_split(c, std::nullopt);
      } else {
        for (double t : thr[c]) try_split(c, t);
      }
    }
    return out;
  }

  double p1(const std::vector<std::size_t>& rows) const {
    std::size_t ones = 0;
    for (auto r : rows) ones += data->y()[r];
    return static_cast<double>(ones) / static_cast<double>(rows.size());
  }
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  bool leaf = true;
  std::size_t column = 0;
  std::optional<double> threshold;
  double gain_y = 0.0, gain_s = 0.0;
  double p1 = 0.0;
  std::size_t count = 0;
  NodePtr left, right;
};

inline NodePtr leaf(const Context& ctx, const std::vector<std::size_t>& rows) {
  auto n = std::make_shared<Node>();
  n->p1 = ctx.p1(rows);
  n->count = rows.size();
  return n;
}

inline NodePtr internal(const Context& ctx, const std::vector<std::size_t>& rows, const Candidate& c, NodePtr l,
                        NodePtr r) {
  auto n = std::make_shared<Node>();
  n->leaf = false;
  n->column = c.column;
  n->threshold = c.threshold;
  n->gain_y = c.gain_y;
  n->gain_s = c.gain_s;
  n->p1 = ctx.p1(rows);
  n->count = rows.size();
  n->left = std::move(l);
  n->right = std::move(r);
  return n;
}

/// Picks a candidate index or nullopt; ties go to the first best.
using Selector = std::function<std::optional<std::size_t>(const std::vector<Candidate>&)>;

inline Selector performance() {
  return [](const std::vector<Candidate>& c) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (!best || c[i].gain_y > c[*best].gain_y) best = i;
    if (best && c[*best].gain_y <= 0.0) return std::nullopt;
    return best;
  };
}

inline Selector constrained(double gamma) {
  return [gamma](const std::vector<Candidate>& c) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i].gain_s <= gamma && (!best || c[i].gain_y > c[*best].gain_y)) best = i;
    if (best && c[*best].gain_y <= 0.0) return std::nullopt;
    return best;
  };
}

inline Selector combined(double gamma) {
  return [gamma](const std::vector<Candidate>& c) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    double score = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double v = (1.0 - gamma) * c[i].gain_y - gamma * c[i].gain_s;
      if (!best || v > score) {
        best = i;
        score = v;
      }
    }
    if (best && score <= 0.0) return std::nullopt;
    return best;
  };
}

inline NodePtr grow(const Context& ctx, const std::vector<std::size_t>& rows, std::set<std::size_t> used,
                    const Selector& select, std::size_t depth) {
  if (depth + 1 >= ctx.max_depth) return leaf(ctx, rows);
  const auto c = ctx.candidates(rows, used);
  const auto pick = select(c);
  if (!pick) return leaf(ctx, rows);
  const auto& best = c[*pick];
  if (ctx.data->feature(best.column).kind == ColumnKind::binary) used.insert(best.column);
  return internal(ctx, rows, best, grow(ctx, best.left, used, select, depth + 1),
                  grow(ctx, best.right, used, select, depth + 1));
}

inline NodePtr grow(const Dataset& d, const Selector& select, std::size_t max_depth, double min_samples) {
  Context ctx(d, max_depth, min_samples);
  std::vector<std::size_t> rows(d.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return grow(ctx, rows, {}, select, 0);
}

/// Every tree the backtracking constrained builder may return, listed in its
/// preference order: root candidates by decreasing gain_y (stable), then the
/// left subtree's alternatives, then the right's. A leaf is allowed when no
/// candidate exists, or when some candidate satisfies the constraint but the
/// node sits at the depth limit or no such candidate has positive gain_y.
inline std::vector<NodePtr> feasible_trees(const Context& ctx, const std::vector<std::size_t>& rows,
                                           const std::set<std::size_t>& used, double gamma, std::size_t depth) {
  const auto c = ctx.candidates(rows, used);
  if (c.empty()) return {leaf(ctx, rows)};
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i].gain_s <= gamma) valid.push_back(i);
  if (valid.empty()) return {};
  if (depth + 1 >= ctx.max_depth) return {leaf(ctx, rows)};
  std::vector<std::size_t> useful;
  for (auto i : valid)
    if (c[i].gain_y > 0.0) useful.push_back(i);
  if (useful.empty()) return {leaf(ctx, rows)};
  std::stable_sort(useful.begin(), useful.end(), [&](std::size_t a, std::size_t b) { return c[a].gain_y > c[b].gain_y; });
  std::vector<NodePtr> out;
  for (auto i : useful) {
    auto u = used;
    if (ctx.data->feature(c[i].column).kind == ColumnKind::binary) u.insert(c[i].column);
    const auto lefts = feasible_trees(ctx, c[i].left, u, gamma, depth + 1);
    if (lefts.empty()) continue;
    const auto rights = feasible_trees(ctx, c[i].right, u, gamma, depth + 1);
    for (const auto& l : lefts)
      for (const auto& r : rights) out.push_back(internal(ctx, rows, c[i], l, r));
  }
  return out;
}

/// All trees (any leaf placement) whose internal nodes each satisfy
/// gain_s <= gamma, up to the depth limit.
inline std::vector<NodePtr> fair_trees(const Context& ctx, const std::vector<std::size_t>& rows,
                                       const std::set<std::size_t>& used, double gamma, std::size_t depth) {
  std::vector<NodePtr> out{leaf(ctx, rows)};
  if (depth + 1 >= ctx.max_depth) return out;
  for (const auto& c : ctx.candidates(rows, used)) {
    if (c.gain_s > gamma) continue;
    auto u = used;
    if (ctx.data->feature(c.column).kind == ColumnKind::binary) u.insert(c.column);
    for (const auto& l : fair_trees(ctx, c.left, u, gamma, depth + 1))
      for (const auto& r : fair_trees(ctx, c.right, u, gamma, depth + 1)) out.push_back(internal(ctx, rows, c, l, r));
  }
  return out;
}

inline std::size_t depth(const Node* n) {
  if (!n || n->leaf) return 0;
  return 1 + std::max(depth(n->left.get()), depth(n->right.get()));
}

/// Structural comparison against a library tree; gains within `tol`.
inline bool same(const Node* a, const fairtree::TreeNode* b, double tol, std::string* why = nullptr) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (!a || !b) return (!a && !b) ? true : fail("one side null");
  if (a->leaf != b->is_leaf()) return fail("leaf/internal mismatch at count " + std::to_string(a->count));
  if (a->count != b->count) return fail("count mismatch");
  if (std::abs(a->p1 - b->p1) > tol) return fail("p1 mismatch");
  if (a->leaf) return true;
  if (a->column != b->split->column || a->threshold != b->split->threshold)
    return fail("split mismatch: column " + std::to_string(a->column) + " vs " + std::to_string(b->split->column));
  if (std::abs(a->gain_y - b->gain_y) > tol || std::abs(a->gain_s - b->gain_s) > tol) return fail("gain mismatch");
  return same(a->left.get(), b->left.get(), tol, why) && same(a->right.get(), b->right.get(), tol, why);
}

/// Recomputes gain_s of every internal node on the training rows that reach
/// it; returns the largest value (0 for leaf-only or empty trees).
inline double max_gain_s(const fairtree::Tree& tree, const Dataset& d) {
  double worst = 0.0;
  std::function<void(const fairtree::TreeNode*, const std::vector<std::size_t>&)> walk =
      [&](const fairtree::TreeNode* n, const std::vector<std::size_t>& rows) {
        if (!n || n->is_leaf()) return;
        const auto& v = d.feature(n->split->column).values;
        std::vector<std::size_t> l, r;
        std::vector<std::uint8_t> sl, sr;
        for (auto i : rows) {
          const bool left = n->split->threshold ? v[i] <= *n->split->threshold : v[i] == 0.0;
          (left ? l : r).push_back(i);
          (left ? sl : sr).push_back(d.s()[i]);
        }
        worst = std::max(worst, gain(sl, sr));
        walk(n->left.get(), l);
        walk(n->right.get(), r);
      };
  std::vector<std::size_t> rows(d.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  walk(tree.root.get(), rows);
  return worst;
}

/// Random small dataset mixing binary columns and numeric columns with few
/// distinct values (to force ties and repeated thresholds).
inline Dataset random_dataset(fairtree::Rng& rng, std::size_t n, std::size_t features) {
  std::vector<fairtree::FeatureColumn> cols;
  std::vector<std::uint8_t> y(n), s(n);
  const double ps = 0.2 + 0.6 * rng.uniform();
  for (std::size_t c = 0; c < features; ++c) {
    const bool binary = rng.bernoulli(0.4);
    const auto levels = 2 + rng.below(9);
    std::vector<double> v(n);
    for (auto& x : v) x = binary ? static_cast<double>(rng.below(2)) : static_cast<double>(rng.below(levels)) * 0.5;
    cols.push_back({"f" + std::to_string(c), binary ? ColumnKind::binary : ColumnKind::numeric,
                    "f" + std::to_string(c), std::move(v)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    double z = rng.normal();
    if (!cols.empty()) z += cols[0].values[i] - 1.0;
    if (cols.size() > 1) z -= 0.5 * cols[1].values[i];
    y[i] = z > 0.0 ? 1 : 0;
    s[i] = rng.bernoulli(0.5) ? y[i] : static_cast<std::uint8_t>(rng.bernoulli(ps));
  }
  return Dataset(std::move(cols), std::move(y), std::move(s));
}

// ---------------------------------------------------------------------------
// Metric oracles

/// AUROC by enumerating every positive/negative pair.
inline double auroc(const std::vector<double>& score, const std::vector<int>& label) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (!label[i]) continue;
    for (std::size_t j = 0; j < score.size(); ++j) {
      if (label[j]) continue;
      ++pairs;
      wins += score[i] > score[j] ? 1.0 : (score[i] == score[j] ? 0.5 : 0.0);
    }
  }
  return pairs ? wins / static_cast<double>(pairs) : 0.5;
}

using Pt = fairtree::TradeoffPoint;

/// Trapezoid area with explicit extension points, built from an insertion
/// sort on AUROC.
inline double autoc(std::vector<Pt> pts) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    for (std::size_t j = i; j > 0 && pts[j].auroc < pts[j - 1].auroc; --j) std::swap(pts[j], pts[j - 1]);
  double hi = -1.0, lo = 2.0;
  for (const auto& p : pts) {
    hi = std::max(hi, 1.0 - p.spd);
    lo = std::min(lo, 1.0 - p.spd);
  }
  std::vector<std::pair<double, double>> xy{{0.5, hi}};
  for (const auto& p : pts) xy.emplace_back(p.auroc, 1.0 - p.spd);
  xy.emplace_back(1.0, lo);
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xy.size(); ++i)
    area += (xy[i + 1].first - xy[i].first) * (xy[i].second + xy[i + 1].second) / 2.0;
  return area;
}

inline std::vector<bool> pareto(const std::vector<Pt>& pts) {
  std::vector<bool> m(pts.size(), true);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double ai = pts[i].auroc, fi = 1.0 - pts[i].spd, aj = pts[j].auroc, fj = 1.0 - pts[j].spd;
      if (aj >= ai && fj >= fi && (aj > ai || fj > fi)) m[i] = false;
    }
  return m;
}

inline std::size_t unique(const std::vector<Pt>& pts, const std::vector<bool>* mask = nullptr) {
  std::vector<std::pair<double, double>> keys;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!mask || (*mask)[i]) keys.emplace_back(std::round(pts[i].auroc * 1e6), std::round(pts[i].spd * 1e6));
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta by Lentz's continued fraction, for the Welch
// p-value reference.

inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a - 1.0 + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + 1.0 + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

inline double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(lbt) * betacf(a, b, x) / a;
  return 1.0 - std::exp(lbt) * betacf(b, a, 1.0 - x) / b;
}

inline double welch_p(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto var = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double qa = var(a) / na, qb = var(b) / nb;
  const double t = (mean(a) - mean(b)) / std::sqrt(qa + qb);
  const double df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  return ibeta(df / 2.0, 0.5, df / (df + t * t));
}

}  // namespace oracle
