#pragma once

#include <array>
#include <cmath>

#include "reachlab/common.hpp"
#include "reachlab/rng.hpp"

namespace reachlab {

using Obs5 = std::array<double, 5>;

// Two-joint kinematic arm: joint 1 yaws about the vertical axis, joint 2
// pitches the effective link of length R mounted at height h0. The end
// effector therefore lives on a sphere of radius R around (0, 0, h0).
struct KinematicModel {
  double base_height = 0.36;  // h0 [m]
  double link_length = 0.78;  // R [m]
  Vec2 joint_low = {deg2rad(-170.0), deg2rad(-120.0)};
  Vec2 joint_high = {deg2rad(170.0), deg2rad(120.0)};
  double max_joint_speed = 1.0;   // [rad/s] per joint
  double workspace_scale = 1.56;  // D_max [m], normalizes target errors
  double control_frequency = 50.0;  // f [Hz]

  void validate() const {
    check(link_length > 0.0, "model: link_length must be > 0");
    check(control_frequency > 0.0, "model: control_frequency must be > 0");
    check(workspace_scale > 0.0, "model: workspace_scale must be > 0");
    check(max_joint_speed > 0.0, "model: max_joint_speed must be > 0");
    for (int i = 0; i < 2; ++i)
      check(joint_low[i] < joint_high[i], "model: joint limits low < high");
  }
  double dt() const { return 1.0 / control_frequency; }
};

inline Vec3 forward_kinematics(const KinematicModel& m, const Vec2& q) {
  const double s2 = std::sin(q[1]), c2 = std::cos(q[1]);
  return {m.link_length * s2 * std::cos(q[0]),
          m.link_length * s2 * std::sin(q[0]),
          m.base_height + m.link_length * c2};
}

// Closed-form inverse on the s2 >= 0 branch; returns false when the target
// is off the reachable shell or outside joint limits.
inline bool inverse_kinematics(const KinematicModel& m, const Vec3& t, Vec2& q_out,
                               double shell_tol = 1e-6) {
  const double dx = t[0], dy = t[1], dz = t[2] - m.base_height;
  const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (std::abs(r - m.link_length) > shell_tol) return false;
  const double rho = std::sqrt(dx * dx + dy * dy);
  q_out[1] = std::atan2(rho, dz);
  q_out[0] = rho > 1e-12 ? std::atan2(dy, dx) : 0.0;
  for (int i = 0; i < 2; ++i)
    if (q_out[i] < m.joint_low[i] || q_out[i] > m.joint_high[i]) return false;
  const Vec3 e = forward_kinematics(m, q_out);
  return std::abs(e[0] - t[0]) < shell_tol && std::abs(e[1] - t[1]) < shell_tol &&
         std::abs(e[2] - t[2]) < shell_tol;
}

struct EnvConfig {
  KinematicModel model;
  int episode_steps = 1000;  // N
  Vec2 home = {0.0, kPi / 4.0};
  double target_pitch_low = deg2rad(20.0);
  double target_pitch_high = deg2rad(90.0);
  double target_yaw_low = deg2rad(-170.0);
  double target_yaw_high = deg2rad(170.0);

  void validate() const {
    model.validate();
    check(episode_steps >= 1, "env: episode_steps must be >= 1");
    for (int i = 0; i < 2; ++i)
      check(home[i] >= model.joint_low[i] && home[i] <= model.joint_high[i],
            "env: home outside joint limits");
    check(target_pitch_low < target_pitch_high, "env: pitch range empty");
  }
};

struct EnvStep {
  Obs5 obs;
  double reward = 0.0;
  bool done = false;
};

// Deterministic discrete-time reach-and-balance task. Commanded normalized
// joint velocities integrate at f Hz; the observation is
// [delta_x, delta_y, delta_z, q1_norm, q2_norm] and the reward is the
// per-step decrease of the normalized target distance.
class ReachEnv {
 public:
  explicit ReachEnv(EnvConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const EnvConfig& config() const { return cfg_; }
  int episode_steps() const { return cfg_.episode_steps; }

  Vec3 sample_target(Rng& rng) const {
    const double yaw = rng.uniform(cfg_.target_yaw_low, cfg_.target_yaw_high);
    const double pitch = rng.uniform(cfg_.target_pitch_low, cfg_.target_pitch_high);
    return forward_kinematics(cfg_.model, {yaw, pitch});
  }

  Obs5 reset(Rng& rng) { return reset_to(sample_target(rng)); }

  Obs5 reset_to(const Vec3& target) {
    Vec2 q_ik;
    check(inverse_kinematics(cfg_.model, target, q_ik),
          "env: target outside the reachable set");
    q_ = cfg_.home;
    target_ = target;
    k_ = 0;
    prev_dist_ = normalized_distance();
    initial_dist_ = prev_dist_;
    return observation();
  }

  EnvStep step(const Vec2& action) {
    check(k_ < cfg_.episode_steps, "env: episode already finished");
    const double scale = cfg_.model.max_joint_speed * cfg_.model.dt();
    for (int i = 0; i < 2; ++i) {
      const double u = clip(action[i], -1.0, 1.0);
      q_[i] = clip(q_[i] + u * scale, cfg_.model.joint_low[i], cfg_.model.joint_high[i]);
    }
    k_ += 1;
    const double dist = normalized_distance();
    EnvStep out;
    out.obs = observation();
    out.reward = prev_dist_ - dist;
    out.done = (k_ == cfg_.episode_steps);
    prev_dist_ = dist;
    return out;
  }

  Obs5 observation() const {
    const Vec3 e = forward_kinematics(cfg_.model, q_);
    Obs5 o;
    for (int j = 0; j < 3; ++j)
      o[j] = clip((target_[j] - e[j]) / cfg_.model.workspace_scale, -1.0, 1.0);
    for (int i = 0; i < 2; ++i) o[3 + i] = normalize_joint(i, q_[i]);
    return o;
  }

  // true task-space error in meters; metrics are computed from this, never
  // from the (possibly delayed, normalized) agent observation
  Vec3 error_m() const {
    const Vec3 e = forward_kinematics(cfg_.model, q_);
    return {target_[0] - e[0], target_[1] - e[1], target_[2] - e[2]};
  }

  double normalized_distance() const {
    const Vec3 err = error_m();
    return norm2(err) / cfg_.model.workspace_scale;
  }

  double initial_normalized_distance() const { return initial_dist_; }
  const Vec2& joints() const { return q_; }
  const Vec3& target() const { return target_; }
  int step_index() const { return k_; }

  double normalize_joint(int i, double q) const {
    const double lo = cfg_.model.joint_low[i], hi = cfg_.model.joint_high[i];
    return 2.0 * (q - lo) / (hi - lo) - 1.0;
  }
  double denormalize_joint(int i, double qn) const {
    const double lo = cfg_.model.joint_low[i], hi = cfg_.model.joint_high[i];
    return lo + (qn + 1.0) * 0.5 * (hi - lo);
  }

 private:
  EnvConfig cfg_;
  Vec2 q_ = {0.0, 0.0};
  Vec3 target_ = {0.0, 0.0, 0.0};
  int k_ = 0;
  double prev_dist_ = 0.0;
  double initial_dist_ = 0.0;
};

}  // namespace reachlab
