#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairtree/dataset.hpp"
#include "fairtree/dtfc.hpp"
#include "fairtree/dual_tree.hpp"
#include "fairtree/error.hpp"
#include "fairtree/metrics.hpp"
#include "fairtree/policies.hpp"

namespace fairtree {

enum class MethodKind { two_trees, combined, constrained, dtfc };

inline std::string_view to_string(MethodKind m) {
  switch (m) {
    case MethodKind::two_trees: return "two_trees";
    case MethodKind::combined: return "combined";
    case MethodKind::constrained: return "constrained";
    case MethodKind::dtfc: return "dtfc";
  }
  return "?";
}

inline MethodKind parse_method(std::string_view name) {
  if (name == "two_trees" || name == "2tft") return MethodKind::two_trees;
  if (name == "combined") return MethodKind::combined;
  if (name == "constrained") return MethodKind::constrained;
  if (name == "dtfc" || name == "backtracking") return MethodKind::dtfc;
  throw Error("unknown method '" + std::string(name) + "'");
}

inline constexpr MethodKind all_methods[] = {MethodKind::two_trees, MethodKind::combined, MethodKind::constrained,
                                             MethodKind::dtfc};

/// Degenerate evaluations seen while building a curve.
struct CurveEvents {
  std::size_t single_class_auroc = 0;
  std::size_t empty_group_spd = 0;
  std::size_t empty_trees = 0;

  bool any() const { return single_class_auroc + empty_group_spd > 0; }

  CurveEvents& operator+=(const CurveEvents& o) {
    single_class_auroc += o.single_class_auroc;
    empty_group_spd += o.empty_group_spd;
    empty_trees += o.empty_trees;
    return *this;
  }
};

struct CurveResult {
  TradeoffCurve curve;
  CurveEvents events;
  bool timed_out = false;
};

/// Scores one set of test probabilities: AUROC on the probabilities, SPD on
/// the thresholded labels.
inline TradeoffPoint evaluate_point(double gamma, std::span<const double> proba, const Dataset& test,
                                    CurveEvents& events) {
  const auto a = auroc<std::uint8_t>(proba, test.y());
  const auto labels = to_labels(proba);
  const auto d = spd<int, std::uint8_t>(labels, test.s());
  if (a.degenerate) ++events.single_class_auroc;
  if (d.degenerate) ++events.empty_group_spd;
  return {gamma, a.value, d.value};
}

/// Trains `method` on `train` for every gamma and evaluates on `test`.
/// Single-tree methods retrain per gamma; the dual model is trained once and
/// only the mixing weight varies. Passing `deadline` stops a single-tree
/// sweep (between gammas, or inside a DTFC search) and sets timed_out.
inline CurveResult build_curve(MethodKind method, const Dataset& train, const Dataset& test,
                               std::span<const double> gammas, const GrowthLimits& limits, Deadline deadline = {}) {
  if (gammas.empty()) throw Error("build_curve: no gamma values");
  if (std::adjacent_find(gammas.begin(), gammas.end(), std::greater_equal<>()) != gammas.end())
    throw Error("build_curve: gammas must strictly increase");
  limits.validate();
  CurveResult out;
  out.curve.method = std::string(to_string(method));
  out.curve.points.reserve(gammas.size());

  if (method == MethodKind::two_trees) {
    const auto model = train_2tft(train, limits);
    const auto scores = score(model, test);
    for (double g : gammas) out.curve.points.push_back(evaluate_point(g, combine_proba(scores, g), test, out.events));
    return out;
  }

  for (double g : gammas) {
    if (deadline.expired()) {
      out.timed_out = true;
      return out;
    }
    Tree tree;
    switch (method) {
      case MethodKind::combined:
        tree = train_tree(train, PolicyConfig{PolicyKind::combined, g}, limits);
        break;
      case MethodKind::constrained:
        tree = train_tree(train, PolicyConfig{PolicyKind::constrained, g}, limits);
        break;
      case MethodKind::dtfc: {
        auto r = dtfc_train(train, g, limits, deadline);
        if (r.timed_out()) {
          out.timed_out = true;
          return out;
        }
        tree = std::move(r.tree);
        break;
      }
      case MethodKind::two_trees:
        break;
    }
    if (tree.empty()) ++out.events.empty_trees;
    out.curve.points.push_back(evaluate_point(g, predict_proba(tree, test), test, out.events));
  }
  return out;
}

}  // namespace fairtree
