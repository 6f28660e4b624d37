#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace reachlab {

using Vec = std::vector<double>;
using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

constexpr double kPi = 3.14159265358979323846;

inline double clip(double x, double lo, double hi) {
  return std::min(std::max(x, lo), hi);
}

inline double norm2(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline double deg2rad(double d) { return d * kPi / 180.0; }

}  // namespace reachlab
