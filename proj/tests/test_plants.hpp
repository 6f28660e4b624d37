#pragma once

// Scripted test plants sharing the ReachEnv step interface so the
// randomization wrapper can drive them.

#include <vector>

#include "reachlab/env.hpp"
#include "reachlab/rng.hpp"

namespace reachlab::testing {

// Emits a predetermined observation script and ignores actions.
class ScriptedObsPlant {
 public:
  explicit ScriptedObsPlant(std::vector<Obs5> script)
      : script_(std::move(script)) {}

  int episode_steps() const { return static_cast<int>(script_.size()) - 1; }

  Obs5 reset(Rng&) {
    k_ = 0;
    return script_[0];
  }

  EnvStep step(const Vec2&) {
    ++k_;
    return {script_[static_cast<std::size_t>(k_)], 0.0, k_ == episode_steps()};
  }

 private:
  std::vector<Obs5> script_;
  int k_ = 0;
};

// Zero-initialized linear plant x' = A x + B u observed directly. With the
// same input sequence, delaying the inputs shifts the whole trajectory.
class LinearPlant {
 public:
  LinearPlant(int horizon, double a_scale = 0.9) : n_(horizon), a_(a_scale) {}

  int episode_steps() const { return n_; }

  Obs5 reset(Rng&) {
    x_ = {0.0, 0.0, 0.0, 0.0, 0.0};
    k_ = 0;
    return x_;
  }

  EnvStep step(const Vec2& u) {
    Obs5 next;
    // sparse mixing matrix, stable by construction
    next[0] = a_ * x_[0] + 0.1 * x_[1] + 0.5 * u[0];
    next[1] = a_ * x_[1] - 0.2 * x_[0] + 0.3 * u[1];
    next[2] = 0.7 * x_[2] + 0.2 * u[0] - 0.1 * u[1];
    next[3] = 0.8 * x_[3] + 0.05 * x_[2] + 0.4 * u[1];
    next[4] = 0.6 * x_[4] + 0.1 * x_[0] + 0.1 * u[0] + 0.1 * u[1];
    x_ = next;
    ++k_;
    return {x_, x_[0], k_ == n_};
  }

 private:
  int n_;
  double a_;
  Obs5 x_ = {0, 0, 0, 0, 0};
  int k_ = 0;
};

}  // namespace reachlab::testing
