#pragma once

#include <cmath>
#include <vector>

#include "reachlab/common.hpp"

namespace reachlab {

// Metrics run on the true task-space error trajectory in meters
// (k = 0..N inclusive), never on normalized or delayed observations.

// Negated mean distance over all N+1 samples.
inline double compute_npd(const std::vector<Vec3>& errors_m) {
  check(!errors_m.empty(), "compute_npd: empty trajectory");
  double s = 0.0;
  for (const auto& e : errors_m) s += norm2(e);
  return -s / static_cast<double>(errors_m.size());
}

// First step strictly inside the reach radius; N when never reached.
inline int rise_step(const std::vector<Vec3>& errors_m, double reach_radius_m) {
  const int n = static_cast<int>(errors_m.size()) - 1;
  for (int k = 0; k <= n; ++k)
    if (norm2(errors_m[static_cast<std::size_t>(k)]) < reach_radius_m) return k;
  return n;
}

// Time remaining after first entering the reach ball: (N - k_r) / f seconds.
inline double compute_rrt(const std::vector<Vec3>& errors_m, double reach_radius_m,
                          double control_frequency_hz) {
  check(errors_m.size() >= 2, "compute_rrt: trajectory too short");
  const int n = static_cast<int>(errors_m.size()) - 1;
  const int k_r = rise_step(errors_m, reach_radius_m);
  return static_cast<double>(n - k_r) / control_frequency_hz;
}

// Mean proximity score on the inclusive window [k_r, N], in percent.
// Zero when the ball is never entered (k_r = N), so no division by zero.
inline double compute_ss(const std::vector<Vec3>& errors_m, int k_r,
                         double reach_radius_m) {
  const int n = static_cast<int>(errors_m.size()) - 1;
  if (k_r >= n) return 0.0;
  double s = 0.0;
  for (int k = k_r; k <= n; ++k)
    s += std::max(0.0, 1.0 - norm2(errors_m[static_cast<std::size_t>(k)]) / reach_radius_m);
  return 100.0 * s / static_cast<double>(n - k_r + 1);
}

}  // namespace reachlab
