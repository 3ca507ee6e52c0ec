#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fairtree/error.hpp"
#include "fairtree/tree.hpp"

namespace fairtree {

// All selectors scan candidates in enumeration order (column, threshold) and
// only replace the incumbent on a strictly better score, so ties go to the
// lowest column index and then the lowest threshold.

/// Argmax gain_y; nullopt when empty or the best gain_y is 0.
inline std::optional<std::size_t> select_performance(std::span<const SplitCandidate> cands) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (!best || cands[i].gain_y > cands[*best].gain_y) best = i;
  if (best && cands[*best].gain_y <= 0.0) return std::nullopt;
  return best;
}

/// Argmin gain_s; nullopt only when empty.
inline std::optional<std::size_t> select_fairness_min(std::span<const SplitCandidate> cands) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (!best || cands[i].gain_s < cands[*best].gain_s) best = i;
  return best;
}

/// Argmax (1 - gamma) * gain_y - gamma * gain_s; nullopt when the best score
/// is not positive.
inline std::optional<std::size_t> select_combined(std::span<const SplitCandidate> cands, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("select_combined: gamma must lie in [0, 1]");
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double score = (1.0 - gamma) * cands[i].gain_y - gamma * cands[i].gain_s;
    if (!best || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best && best_score <= 0.0) return std::nullopt;
  return best;
}

/// Argmax gain_y among candidates with gain_s <= gamma; nullopt when none is
/// feasible or the best feasible gain_y is 0.
inline std::optional<std::size_t> select_constrained(std::span<const SplitCandidate> cands, double gamma) {
  if (!(gamma >= 0.0)) throw Error("select_constrained: gamma must be >= 0");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].gain_s > gamma) continue;
    if (!best || cands[i].gain_y > cands[*best].gain_y) best = i;
  }
  if (best && cands[*best].gain_y <= 0.0) return std::nullopt;
  return best;
}

enum class PolicyKind { performance, fairness_min, combined, constrained };

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::performance: return "performance";
    case PolicyKind::fairness_min: return "fairness_min";
    case PolicyKind::combined: return "combined";
    case PolicyKind::constrained: return "constrained";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "performance") return PolicyKind::performance;
  if (name == "fairness_min") return PolicyKind::fairness_min;
  if (name == "combined") return PolicyKind::combined;
  if (name == "constrained") return PolicyKind::constrained;
  throw Error("unknown policy kind '" + std::string(name) + "'");
}

/// Selection policy as a value; callable as a SplitPolicy.
struct PolicyConfig {
  PolicyKind kind = PolicyKind::performance;
  double gamma = 0.0;

  void validate() const {
    if (kind == PolicyKind::combined && !(gamma >= 0.0 && gamma <= 1.0))
      throw Error("combined policy: gamma must lie in [0, 1]");
    if (kind == PolicyKind::constrained && !(gamma >= 0.0))
      throw Error("constrained policy: gamma must be >= 0");
  }

  std::optional<std::size_t> operator()(std::span<const SplitCandidate> cands) const {
    switch (kind) {
      case PolicyKind::performance: return select_performance(cands);
      case PolicyKind::fairness_min: return select_fairness_min(cands);
      case PolicyKind::combined: return select_combined(cands, gamma);
      case PolicyKind::constrained: return select_constrained(cands, gamma);
    }
    return std::nullopt;
  }
};

static_assert(SplitPolicy<PolicyConfig>);

inline Tree train_tree(const Dataset& data, const PolicyConfig& policy, const GrowthLimits& limits) {
  policy.validate();
  return train_tree<PolicyConfig>(data, policy, limits);
}

}  // namespace fairtree
