#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "fairtree/error.hpp"

namespace fairtree {

struct AurocResult {
  double value = 0.5;
  bool degenerate = false;  // labels were single-class
};

/// Mann-Whitney estimate P(score+ > score-) + P(score+ = score-) / 2 using
/// mid-ranks for ties.
template <class Label>
AurocResult auroc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw Error("auroc: length mismatch");
  if (scores.empty()) throw Error("auroc: empty input");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum_pos += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return {0.5, true};
  const double pos = static_cast<double>(n_pos);
  const double u = rank_sum_pos - pos * (pos + 1.0) / 2.0;
  return {u / (pos * static_cast<double>(n_neg)), false};
}

struct SpdResult {
  double value = 0.0;
  bool degenerate = false;  // one sensitive group had no rows
};

/// |P(pred = 1 | s = 0) - P(pred = 1 | s = 1)|.
template <class Pred, class Group>
SpdResult spd(std::span<const Pred> predictions, std::span<const Group> s) {
  if (predictions.size() != s.size()) throw Error("spd: length mismatch");
  if (predictions.empty()) throw Error("spd: empty input");
  std::size_t n0 = 0, n1 = 0, p0 = 0, p1 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i]) {
      ++n1;
      p1 += predictions[i] ? 1 : 0;
    } else {
      ++n0;
      p0 += predictions[i] ? 1 : 0;
    }
  }
  if (n0 == 0 || n1 == 0) return {0.0, true};
  return {std::abs(static_cast<double>(p0) / static_cast<double>(n0) - static_cast<double>(p1) / static_cast<double>(n1)),
          false};
}

struct TradeoffPoint {
  double gamma = 0.0;
  double auroc = 0.5;
  double spd = 0.0;

  double fairness() const { return 1.0 - spd; }

  friend bool operator==(const TradeoffPoint&, const TradeoffPoint&) = default;
};

struct TradeoffCurve {
  std::string method;
  std::vector<TradeoffPoint> points;

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (!std::isfinite(p.gamma) || !std::isfinite(p.auroc) || !std::isfinite(p.spd))
        throw Error("trade-off curve: non-finite point");
      if (i > 0 && !(p.gamma > points[i - 1].gamma)) throw Error("trade-off curve: gammas must strictly increase");
    }
  }
};

/// Area under the trade-off curve. Points are stably sorted by AUROC, then
/// (0.5, max fairness) is prepended and (1, min fairness) appended before
/// the trapezoidal rule is applied.
inline double autoc(std::span<const TradeoffPoint> points) {
  if (points.empty()) throw Error("autoc: empty curve");
  std::vector<TradeoffPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.auroc < b.auroc; });
  double max_fair = sorted.front().fairness(), min_fair = max_fair;
  for (const auto& p : sorted) {
    max_fair = std::max(max_fair, p.fairness());
    min_fair = std::min(min_fair, p.fairness());
  }
  const auto& first = sorted.front();
  const auto& last = sorted.back();
  double area = (first.auroc - 0.5) * (max_fair + first.fairness());
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k)
    area += (sorted[k + 1].auroc - sorted[k].auroc) * (sorted[k].fairness() + sorted[k + 1].fairness());
  area += (1.0 - last.auroc) * (last.fairness() + min_fair);
  return 0.5 * area;
}

/// Locally Pareto-optimal points: no other point is at least as good in both
/// AUROC and 1 - SPD and strictly better in one. Exact duplicates of a
/// non-dominated point are all members.
inline std::vector<bool> pareto_mask(std::span<const TradeoffPoint> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Sweep by decreasing AUROC; within equal AUROC by decreasing fairness.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].auroc != points[b].auroc) return points[a].auroc > points[b].auroc;
    return points[a].fairness() > points[b].fairness();
  });
  std::vector<bool> mask(points.size(), false);
  bool have_best = false;
  double best_fair = 0.0;  // max fairness over points with strictly higher AUROC
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && points[order[j]].auroc == points[order[i]].auroc) ++j;
    const double group_max = points[order[i]].fairness();
    for (std::size_t k = i; k < j; ++k) {
      const double f = points[order[k]].fairness();
      const bool dominated_in_group = f < group_max;
      const bool dominated_above = have_best && best_fair >= f;
      mask[order[k]] = !dominated_in_group && !dominated_above;
    }
    if (!have_best || group_max > best_fair) best_fair = group_max;
    have_best = true;
    i = j;
  }
  return mask;
}

inline std::size_t pareto_count(std::span<const TradeoffPoint> points) {
  const auto mask = pareto_mask(points);
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

namespace detail {

inline std::pair<long long, long long> rounded_key(const TradeoffPoint& p) {
  return {std::llround(p.auroc * 1e6), std::llround(p.spd * 1e6)};
}

}  // namespace detail

/// Distinct (AUROC, SPD) pairs after rounding both to 6 decimals.
inline std::size_t unique_count(std::span<const TradeoffPoint> points) {
  std::set<std::pair<long long, long long>> keys;
  for (const auto& p : points) keys.insert(detail::rounded_key(p));
  return keys.size();
}

inline std::size_t unique_pareto_count(std::span<const TradeoffPoint> points) {
  const auto mask = pareto_mask(points);
  std::set<std::pair<long long, long long>> keys;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (mask[i]) keys.insert(detail::rounded_key(points[i]));
  return keys.size();
}

/// Population variance of the Euclidean distances between all unordered
/// pairs in (AUROC, 1 - SPD) space, duplicates included. Zero for fewer than
/// two points or a single unique point.
inline double variance_pairwise(std::span<const TradeoffPoint> points) {
  if (points.size() < 2 || unique_count(points) <= 1) return 0.0;
  std::vector<double> d;
  d.reserve(points.size() * (points.size() - 1) / 2);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      d.push_back(std::hypot(points[i].auroc - points[j].auroc, points[i].fairness() - points[j].fairness()));
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(d.size());
}

struct CurveMetrics {
  double autoc = 0.0;
  std::size_t n_pareto = 0;
  std::size_t n_unique = 0;
  std::size_t n_unique_pareto = 0;
  double var_pairwise = 0.0;
};

inline CurveMetrics evaluate_curve(std::span<const TradeoffPoint> points) {
  return {autoc(points), pareto_count(points), unique_count(points), unique_pareto_count(points),
          variance_pairwise(points)};
}

inline CurveMetrics evaluate_curve(const TradeoffCurve& curve) { return evaluate_curve(curve.points); }

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Two-sided Welch (unequal variance) two-sample t-test.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error("welch_t_test: each sample needs >= 2 values");
  auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, 0.0, 1.0};
    return {ma > mb ? INFINITY : -INFINITY, 0.0, 0.0};
  }
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  const double x = r.df / (r.df + r.t * r.t);
  r.p = std::clamp(boost::math::ibeta(r.df / 2.0, 0.5, x), 0.0, 1.0);
  return r;
}

/// p-value of welch_t_test for two equally long samples.
inline double paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("paired_t_test: samples differ in length");
  return welch_t_test(a, b).p;
}

}  // namespace fairtree
