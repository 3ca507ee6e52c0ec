#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fairtree/dataset.hpp"

namespace fixtures {

/// 24 rows over binary attributes a0, a1, a2. At gamma = 0.01 and
/// max_depth = 3 the greedy constrained tree splits once on a0 and stops.
/// Below a0 some child has splits but no fair one, so the backtracking
/// builder abandons a0; the second-ranked root a2 admits a fair depth-2 tree.
inline fairtree::Dataset backtracking_witness() {
  struct Group {
    std::array<int, 3> a;
    int y, s, count;
  };
  const Group groups[] = {
      {{0, 0, 0}, 0, 0, 2}, {{0, 0, 0}, 0, 1, 3}, {{0, 0, 1}, 0, 1, 1}, {{0, 1, 1}, 0, 0, 2},
      {{1, 0, 0}, 0, 0, 3}, {{1, 0, 0}, 0, 1, 1}, {{1, 0, 0}, 1, 1, 2}, {{1, 0, 1}, 0, 0, 1},
      {{1, 1, 0}, 1, 0, 3}, {{1, 1, 0}, 1, 1, 3}, {{1, 1, 1}, 0, 1, 3},
  };
  std::vector<double> a0, a1, a2;
  std::vector<std::uint8_t> y, s;
  for (const auto& g : groups) {
    for (int k = 0; k < g.count; ++k) {
      a0.push_back(g.a[0]);
      a1.push_back(g.a[1]);
      a2.push_back(g.a[2]);
      y.push_back(static_cast<std::uint8_t>(g.y));
      s.push_back(static_cast<std::uint8_t>(g.s));
    }
  }
  std::vector<fairtree::FeatureColumn> cols;
  cols.push_back({"a0", fairtree::ColumnKind::binary, "a0", a0});
  cols.push_back({"a1", fairtree::ColumnKind::binary, "a1", a1});
  cols.push_back({"a2", fairtree::ColumnKind::binary, "a2", a2});
  return fairtree::Dataset(std::move(cols), std::move(y), std::move(s));
}

}  // namespace fixtures
