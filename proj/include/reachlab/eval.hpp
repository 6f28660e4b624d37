#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reachlab/env.hpp"
#include "reachlab/metrics.hpp"
#include "reachlab/randomization.hpp"
#include "reachlab/rng.hpp"
#include "reachlab/runtime.hpp"

namespace reachlab {

struct MetricsRecord {
  int target_id = 0;
  std::uint64_t seed = 0;
  EpisodeDraw draw;
  double npd_m = 0.0;
  double rrt_s = 0.0;
  double ss_pct = 0.0;
  double cum_reward = 0.0;
};

struct EvalScenario {
  DelayMode mode = DelayMode::none;
  RandomizationSet set = RandomizationSet::none;
  RandomizationConfig rand;
  std::uint64_t eval_seed = 9001;
  double reach_radius_m = 0.05;
};

// One deterministic evaluation episode on a fixed target. The wrapper env
// must be freshly seeded by the caller; `act` maps the composed observation
// to a (pre-clip) action. Episode draws and transitions depend only on the
// episode seed and target, so records replay bit-exactly in any order.
template <typename ActFn>
MetricsRecord run_eval_episode(RandomizedEnv<ReachEnv>& env, AgentRuntime& rt,
                               ActFn&& act, const Vec3& target, int target_id,
                               const EvalScenario& sc) {
  MetricsRecord rec;
  rec.target_id = target_id;
  rec.seed = sc.eval_seed;
  Obs5 obs = env.reset_to(target);
  rt.begin_episode(obs);
  rec.draw = env.draw();
  std::vector<Vec3> errors;
  errors.reserve(static_cast<std::size_t>(env.episode_steps()) + 1);
  errors.push_back(env.inner().error_m());
  const int n = env.episode_steps();
  for (int k = 0; k < n; ++k) {
    const Vec2 raw = act(rt.composed());
    const Vec2 committed = {clip(raw[0], -1.0, 1.0), clip(raw[1], -1.0, 1.0)};
    const EnvStep s = env.step(committed);
    rt.after_step(s.obs, committed);
    errors.push_back(env.inner().error_m());
    rec.cum_reward += s.reward;
  }
  rec.npd_m = compute_npd(errors);
  const int k_r = rise_step(errors, sc.reach_radius_m);
  rec.rrt_s = compute_rrt(errors, sc.reach_radius_m, env.inner().config().model.control_frequency);
  rec.ss_pct = compute_ss(errors, k_r, sc.reach_radius_m);
  return rec;
}

// One episode per suite target under the given scenario. Each episode gets
// its own substream of the evaluation seed, so all policies see the same
// disturbed episodes and results merge deterministically by target id.
template <typename ActFn>
std::vector<MetricsRecord> evaluate_policy(const EnvConfig& env_cfg,
                                           const AugmentSpec& aug,
                                           const MlpParams* inverse_model,
                                           const DobConfig& dob_cfg,
                                           const std::vector<Vec3>& targets,
                                           const EvalScenario& sc, ActFn&& act) {
  check(!targets.empty(), "evaluate_policy: empty target suite");
  std::vector<MetricsRecord> records;
  records.reserve(targets.size());
  AgentRuntime rt(aug, inverse_model, dob_cfg);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    RandomizedEnv<ReachEnv> env(ReachEnv(env_cfg), sc.mode, sc.set, sc.rand,
                                substream_seed(sc.eval_seed, "eval-episode", i));
    records.push_back(
        run_eval_episode(env, rt, act, targets[i], static_cast<int>(i), sc));
  }
  return records;
}

struct MetricAggregate {
  double reward_mean = 0.0, reward_sem = 0.0;
  double npd_mean = 0.0, npd_sem = 0.0;
  double rrt_mean = 0.0, rrt_sem = 0.0;
  double ss_mean = 0.0, ss_sem = 0.0;
  int count = 0;
};

inline MetricAggregate aggregate_records(const std::vector<MetricsRecord>& recs) {
  MetricAggregate a;
  a.count = static_cast<int>(recs.size());
  if (recs.empty()) return a;
  auto mean_sem = [&](auto get, double& mean, double& sem) {
    double m = 0.0;
    for (const auto& r : recs) m += get(r);
    m /= static_cast<double>(recs.size());
    double v = 0.0;
    for (const auto& r : recs) v += (get(r) - m) * (get(r) - m);
    const std::size_t n = recs.size();
    sem = n > 1 ? std::sqrt(v / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n))
                : 0.0;
    mean = m;
  };
  mean_sem([](const MetricsRecord& r) { return r.cum_reward; }, a.reward_mean, a.reward_sem);
  mean_sem([](const MetricsRecord& r) { return r.npd_m; }, a.npd_mean, a.npd_sem);
  mean_sem([](const MetricsRecord& r) { return r.rrt_s; }, a.rrt_mean, a.rrt_sem);
  mean_sem([](const MetricsRecord& r) { return r.ss_pct; }, a.ss_mean, a.ss_sem);
  return a;
}

}  // namespace reachlab
