#pragma once

#include <array>
#include <cmath>

#include "reachlab/common.hpp"
#include "reachlab/env.hpp"

namespace reachlab {

struct PikConfig {
  double kp = 2.0;        // [1/s]
  double damping = 1e-3;  // damped least-squares regularizer

  void validate() const { check(kp > 0.0, "pik: kp must be > 0"); }
};

// Analytic 3x2 Jacobian of forward_kinematics, stored column-wise.
inline std::array<Vec3, 2> jacobian(const KinematicModel& m, const Vec2& q) {
  const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
  const double s2 = std::sin(q[1]), c2 = std::cos(q[1]);
  const double r = m.link_length;
  return {Vec3{-r * s2 * s1, r * s2 * c1, 0.0},
          Vec3{r * c2 * c1, r * c2 * s1, -r * s2}};
}

// Proportional Cartesian controller mapped through the damped pseudo-inverse
// of the kinematic Jacobian: qdot = (J^T J + damping^2 I)^-1 J^T Kp (t - e),
// emitted in normalized units and clipped to [-1, 1]. Damping keeps the
// 2x2 solve well-posed near the q2 = 0 singularity.
inline Vec2 pik_act(const KinematicModel& m, const PikConfig& cfg, const Vec2& q,
                    const Vec3& target) {
  const Vec3 e = forward_kinematics(m, q);
  const Vec3 v = {cfg.kp * (target[0] - e[0]), cfg.kp * (target[1] - e[1]),
                  cfg.kp * (target[2] - e[2])};
  const auto J = jacobian(m, q);
  const double a = dot(J[0], J[0]) + cfg.damping * cfg.damping;
  const double b = dot(J[0], J[1]);
  const double d = dot(J[1], J[1]) + cfg.damping * cfg.damping;
  const double jt_v0 = dot(J[0], v);
  const double jt_v1 = dot(J[1], v);
  const double det = a * d - b * b;
  const Vec2 qdot = {(d * jt_v0 - b * jt_v1) / det, (a * jt_v1 - b * jt_v0) / det};
  return {clip(qdot[0] / m.max_joint_speed, -1.0, 1.0),
          clip(qdot[1] / m.max_joint_speed, -1.0, 1.0)};
}

// Recovers (q, target) from an agent-side observation so P-IK can run as a
// drop-in policy; under observation delay it acts on the stale pair, which
// is the honest real-world behavior.
inline Vec2 pik_act_from_obs(const KinematicModel& m, const PikConfig& cfg,
                             const ReachEnv& env, const Obs5& obs) {
  const Vec2 q = {env.denormalize_joint(0, obs[3]), env.denormalize_joint(1, obs[4])};
  const Vec3 e = forward_kinematics(m, q);
  const Vec3 target = {e[0] + obs[0] * m.workspace_scale,
                       e[1] + obs[1] * m.workspace_scale,
                       e[2] + obs[2] * m.workspace_scale};
  return pik_act(m, cfg, q, target);
}

}  // namespace reachlab
