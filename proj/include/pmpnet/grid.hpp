#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pmpnet/errors.hpp"
#include "pmpnet/problems.hpp"

namespace pmpnet {

enum class GridKind { kTraining, kTesting };

inline const char* to_string(GridKind k) { return k == GridKind::kTraining ? "training" : "testing"; }

// Cartesian product time_points × x0_points.
struct GridSpec {
  std::vector<double> time_points;
  std::vector<double> x0_points;
  GridKind kind = GridKind::kTraining;

  std::size_t size() const { return time_points.size() * x0_points.size(); }
};

// Training: n_time+1 uniform nodes on [0, T] × the problem's X₀.
// Testing: same times × midpoints of consecutive X₀ values.
inline std::pair<GridSpec, GridSpec> make_grids(const ProblemDef& p, std::size_t n_time) {
  if (n_time < 2) throw ConfigError("n_time must be >= 2");
  GridSpec train;
  train.kind = GridKind::kTraining;
  train.time_points = detail::uniform_points(0.0, p.horizon_T, n_time + 1);
  train.x0_points = p.x0_train;

  GridSpec test;
  test.kind = GridKind::kTesting;
  test.time_points = train.time_points;
  for (std::size_t i = 0; i + 1 < p.x0_train.size(); ++i)
    test.x0_points.push_back(0.5 * (p.x0_train[i] + p.x0_train[i + 1]));
  return {std::move(train), std::move(test)};
}

}  // namespace pmpnet
