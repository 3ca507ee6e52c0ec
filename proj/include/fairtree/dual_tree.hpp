#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtree/error.hpp"
#include "fairtree/policies.hpp"
#include "fairtree/tree.hpp"

namespace fairtree {

/// Two independently grown trees: `t_y` maximizes gain on y, `t_s` minimizes
/// gain on s. Both estimate P(y = 1).
struct DualModel {
  Tree t_y;
  Tree t_s;
  GrowthLimits limits;
};

inline DualModel train_2tft(const Dataset& data, const GrowthLimits& limits) {
  if (data.size() == 0) throw Error("train_2tft: empty dataset");
  return DualModel{train_tree(data, PolicyConfig{PolicyKind::performance, 0.0}, limits),
                   train_tree(data, PolicyConfig{PolicyKind::fairness_min, 0.0}, limits), limits};
}

inline void check_mix_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("combine_predict: gamma must lie in [0, 1]");
}

/// (1 - gamma) * T_y(x) + gamma * T_s(x).
inline double combine_predict(const DualModel& model, double gamma, std::span<const double> row) {
  check_mix_gamma(gamma);
  return (1.0 - gamma) * predict_proba(model.t_y, row) + gamma * predict_proba(model.t_s, row);
}

/// Per-row probabilities of both trees on a dataset; mix them with
/// combine_proba for any number of gamma values.
struct DualScores {
  std::vector<double> p_y;
  std::vector<double> p_s;
};

inline DualScores score(const DualModel& model, const Dataset& data) {
  return {predict_proba(model.t_y, data), predict_proba(model.t_s, data)};
}

inline std::vector<double> combine_proba(const DualScores& scores, double gamma) {
  check_mix_gamma(gamma);
  std::vector<double> out(scores.p_y.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - gamma) * scores.p_y[i] + gamma * scores.p_s[i];
  return out;
}

inline nlohmann::json to_json(const DualModel& model) {
  nlohmann::json j;
  j["t_y"] = to_json(model.t_y);
  j["t_s"] = to_json(model.t_s);
  j["limits"] = {{"max_depth", model.limits.max_depth},
                 {"min_samples", model.limits.min_samples},
                 {"threshold_count", model.limits.threshold_count}};
  return j;
}

inline DualModel dual_model_from_json(const nlohmann::json& j) {
  DualModel m;
  m.t_y = tree_from_json(j.at("t_y"));
  m.t_s = tree_from_json(j.at("t_s"));
  const auto& l = j.at("limits");
  m.limits.max_depth = l.at("max_depth").get<std::size_t>();
  m.limits.min_samples = l.at("min_samples").get<double>();
  m.limits.threshold_count = l.value("threshold_count", std::size_t{10});
  return m;
}

/// Settings for a two-feature partition grid: every other feature is held at
/// `base_row`.
struct PartitionGrid {
  std::size_t x_column = 0;
  std::size_t y_column = 1;
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  std::size_t resolution = 50;
  std::vector<double> base_row;
};

/// Writes CSV rows (gamma, x, y, p1, label) for every grid point and gamma.
inline void write_partition_grid(const DualModel& model, const PartitionGrid& grid, std::span<const double> gammas,
                                 std::ostream& out) {
  if (grid.resolution < 2) throw Error("partition grid: resolution must be >= 2");
  const auto width = model.t_y.feature_names.size();
  if (grid.base_row.size() != width) throw Error("partition grid: base row has wrong width");
  if (grid.x_column >= width || grid.y_column >= width) throw Error("partition grid: column out of range");
  out << "gamma,x,y,p1,label\n";
  std::vector<double> row = grid.base_row;
  const double steps = static_cast<double>(grid.resolution - 1);
  for (double g : gammas) {
    for (std::size_t i = 0; i < grid.resolution; ++i) {
      for (std::size_t k = 0; k < grid.resolution; ++k) {
        row[grid.x_column] = grid.x_min + (grid.x_max - grid.x_min) * static_cast<double>(i) / steps;
        row[grid.y_column] = grid.y_min + (grid.y_max - grid.y_min) * static_cast<double>(k) / steps;
        const double p = combine_predict(model, g, row);
        out << format_number(g) << ',' << format_number(row[grid.x_column]) << ','
            << format_number(row[grid.y_column]) << ',' << format_number(p) << ',' << (p >= 0.5 ? 1 : 0) << '\n';
      }
    }
  }
}

}  // namespace fairtree
