#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "reachlab/env.hpp"
#include "reachlab/policy.hpp"
#include "reachlab/ppo.hpp"
#include "reachlab/randomization.hpp"
#include "reachlab/rng.hpp"
#include "reachlab/runtime.hpp"
#include "reachlab/trajlog.hpp"

namespace reachlab {

struct RolloutStats {
  int episodes = 0;
  double episode_reward_sum = 0.0;

  double mean_episode_reward() const {
    return episodes > 0 ? episode_reward_sum / episodes : 0.0;
  }
};

// Steps a fleet of independently seeded wrapped environments with the
// shared read-only policy. Episodes continue across rollout boundaries;
// the critic bootstraps truncated tails. Per-actor state (env, agent
// runtime, policy sampling stream) never crosses actors.
class VecRunner {
 public:
  using DrawCallback =
      std::function<void(int actor, long episode, const EpisodeDraw&)>;
  using EpisodeSink = std::function<void(Episode&&)>;

  VecRunner(std::vector<RandomizedEnv<ReachEnv>> envs, const AugmentSpec& aug,
            const MlpParams* inverse_model, const DobConfig& dob_cfg,
            std::uint64_t run_seed) {
    check(!envs.empty(), "runner: need at least one environment");
    slots_.reserve(envs.size());
    for (std::size_t i = 0; i < envs.size(); ++i)
      slots_.push_back(Slot{std::move(envs[i]),
                            AgentRuntime(aug, inverse_model, dob_cfg),
                            Rng(substream_seed(run_seed, "policy", i))});
  }

  void set_draw_callback(DrawCallback cb) { on_draw_ = std::move(cb); }

  // When set, agent-visible (observation, committed action) sequences are
  // recorded per episode; only meaningful on the nominal stack. Recording
  // starts with the first episode that begins after it is enabled.
  void set_episode_sink(EpisodeSink sink) { sink_ = std::move(sink); }
  void set_recording_enabled(bool on) { record_enabled_ = on; }

  int actors() const { return static_cast<int>(slots_.size()); }
  int observation_dim() const { return slots_.front().rt.spec().observation_dim(); }

  void reset_all() {
    for (std::size_t i = 0; i < slots_.size(); ++i) start_episode(static_cast<int>(i));
  }

  RolloutStats collect(const PolicyParams& params, int horizon, RolloutBatch& batch) {
    const int n_actors = actors();
    const int obs_dim = observation_dim();
    check(params.spec.observation_dim() == obs_dim, "runner: policy/runtime dim mismatch");
    if (batch.actors != n_actors || batch.horizon != horizon || batch.obs_dim != obs_dim)
      batch.resize(n_actors, horizon, obs_dim);
    RolloutStats stats;
    for (int t = 0; t < horizon; ++t) {
      for (int a = 0; a < n_actors; ++a) {
        Slot& slot = slots_[static_cast<std::size_t>(a)];
        const std::size_t i =
            static_cast<std::size_t>(a) * static_cast<std::size_t>(horizon) +
            static_cast<std::size_t>(t);
        const Vec& obs = slot.rt.composed();
        std::copy(obs.begin(), obs.end(),
                  batch.obs.begin() + i * static_cast<std::size_t>(obs_dim));
        const ActResult act = policy_act(params, obs, slot.policy_rng, false, ws_);
        batch.raw_actions[i * 2] = act.raw_action[0];
        batch.raw_actions[i * 2 + 1] = act.raw_action[1];
        batch.log_probs[i] = act.log_prob;
        batch.values[i] = act.value;
        const EnvStep s = slot.env.step(act.action);
        batch.rewards[i] = s.reward;
        batch.dones[i] = s.done ? 1 : 0;
        slot.episode_reward += s.reward;
        if (sink_ && slot.recording) {
          slot.traj.actions.push_back(act.action);
          slot.traj.observations.push_back(s.obs);
        }
        if (s.done) {
          stats.episodes += 1;
          stats.episode_reward_sum += slot.episode_reward;
          if (sink_ && slot.recording) sink_(std::move(slot.traj));
          slot.episode_index += 1;
          start_episode(a);
        } else {
          slot.rt.after_step(s.obs, act.action);
        }
      }
    }
    for (int a = 0; a < n_actors; ++a) {
      Slot& slot = slots_[static_cast<std::size_t>(a)];
      policy_features(params, slot.rt.composed(), ws_);
      batch.bootstrap_values[static_cast<std::size_t>(a)] = policy_value(params, ws_);
    }
    return stats;
  }

 private:
  struct Slot {
    RandomizedEnv<ReachEnv> env;
    AgentRuntime rt;
    Rng policy_rng;
    double episode_reward = 0.0;
    long episode_index = 0;
    Episode traj;
    bool recording = false;
  };

  void start_episode(int a) {
    Slot& slot = slots_[static_cast<std::size_t>(a)];
    const Obs5 first = slot.env.reset();
    slot.rt.begin_episode(first);
    slot.episode_reward = 0.0;
    if (on_draw_) on_draw_(a, slot.episode_index, slot.env.draw());
    slot.recording = sink_ && record_enabled_;
    if (slot.recording) {
      slot.traj = Episode{};
      slot.traj.observations.push_back(first);
    }
  }

  std::vector<Slot> slots_;
  PolicyWorkspace ws_;
  DrawCallback on_draw_;
  EpisodeSink sink_;
  bool record_enabled_ = false;
};

}  // namespace reachlab
