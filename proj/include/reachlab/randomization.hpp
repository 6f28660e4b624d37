#pragma once

#include <optional>
#include <string>

#include "reachlab/common.hpp"
#include "reachlab/env.hpp"
#include "reachlab/filters.hpp"
#include "reachlab/rng.hpp"

namespace reachlab {

// Delay classes: (a) no delay, (b) observations delayed with the reward
// computed from the undelayed state, (c) actions delayed before reaching
// the plant, so observation and reward consequences lag identically.
enum class DelayMode { none, delayed_observation, delayed_action };

enum class RandomizationSet {
  none,             // nominal training
  delay_only,       // set I
  delay_bandwidth,  // set II
  full,             // set III: delay + bandwidth + gaussian disturbance
  step_study,       // simplified study: delay + constant step disturbance
};

enum class DisturbanceKind { none, gaussian, step };

// Per-episode frozen disturbance draw.
struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::none;
  Vec2 gaussian_mean = {0.0, 0.0};
  double gaussian_sigma = 0.2;
  Vec2 step_magnitude = {0.0, 0.0};
  int step_onset = 0;
};

struct RandomizationConfig {
  int delay_horizon = 14;  // H = m - 1; h ~ uniform on {0..H}
  double sample_time = 0.02;
  double bandwidth_low_hz = 0.2;
  double bandwidth_high_hz = 2.0;
  double gaussian_sigma = 0.2;
  double gaussian_mean_low = -0.7;
  double gaussian_mean_high = 0.7;
  double step_magnitude = 0.5;
  std::vector<int> step_onsets = {0, 500};

  void validate() const {
    check(delay_horizon >= 0, "randomization: delay_horizon must be >= 0");
    check(sample_time > 0.0, "randomization: sample_time must be > 0");
    check(bandwidth_low_hz > 0.0 && bandwidth_low_hz <= bandwidth_high_hz,
          "randomization: bad bandwidth range");
    check(!step_onsets.empty(), "randomization: step_onsets must not be empty");
  }
};

struct EpisodeDraw {
  int delay = 0;             // h, constant within the episode
  bool bandwidth_on = false;
  double cutoff_hz = 0.0;    // f_c, meaningful when bandwidth_on
  DisturbanceSpec disturbance;
};

// All draws happen in a fixed order so a logged draw replays exactly.
inline EpisodeDraw sample_episode_randomization(RandomizationSet set,
                                                const RandomizationConfig& cfg,
                                                Rng& rng) {
  EpisodeDraw d;
  if (set != RandomizationSet::none)
    d.delay = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.delay_horizon + 1)));
  if (set == RandomizationSet::delay_bandwidth || set == RandomizationSet::full) {
    d.bandwidth_on = true;
    d.cutoff_hz = rng.uniform(cfg.bandwidth_low_hz, cfg.bandwidth_high_hz);
  }
  if (set == RandomizationSet::full) {
    d.disturbance.kind = DisturbanceKind::gaussian;
    d.disturbance.gaussian_sigma = cfg.gaussian_sigma;
    for (int i = 0; i < 2; ++i)
      d.disturbance.gaussian_mean[i] =
          rng.uniform(cfg.gaussian_mean_low, cfg.gaussian_mean_high);
  } else if (set == RandomizationSet::step_study) {
    d.disturbance.kind = DisturbanceKind::step;
    for (int i = 0; i < 2; ++i)
      d.disturbance.step_magnitude[i] =
          rng.uniform_int(2) == 0 ? cfg.step_magnitude : -cfg.step_magnitude;
    d.disturbance.step_onset = cfg.step_onsets[rng.uniform_int(cfg.step_onsets.size())];
  }
  return d;
}

// Additive input disturbance at plant step k; the sum is clipped to the
// plant's admissible range, so saturation shows up as a nonlinearity.
inline Vec2 apply_disturbance(const DisturbanceSpec& spec, int k, const Vec2& u,
                              Rng& rng) {
  Vec2 out = u;
  switch (spec.kind) {
    case DisturbanceKind::none:
      return out;
    case DisturbanceKind::gaussian:
      for (int i = 0; i < 2; ++i)
        out[i] += rng.normal(spec.gaussian_mean[i], spec.gaussian_sigma);
      break;
    case DisturbanceKind::step:
      if (k >= spec.step_onset)
        for (int i = 0; i < 2; ++i) out[i] += spec.step_magnitude[i];
      break;
  }
  for (int i = 0; i < 2; ++i) out[i] = clip(out[i], -1.0, 1.0);
  return out;
}

// Wraps an inner plant with the episode randomizations. Inner must expose
// Obs5 reset(Rng&), EnvStep step(const Vec2&) and int episode_steps().
//
// Delay realization per class:
//   (b) a delay line on observations; reads before h real samples exist
//       hold the episode's first observation. Rewards stay immediate.
//   (c) a delay line on actions with zero input during warm-up (commands
//       still in flight move nothing on a velocity-controlled plant).
//       Observation and reward are read from the lagging plant itself, so
//       both suffer the same delay relative to the agent's decisions.
template <typename Env>
class RandomizedEnv {
 public:
  RandomizedEnv(Env env, DelayMode mode, RandomizationSet set,
                RandomizationConfig cfg, std::uint64_t seed)
      : env_(std::move(env)),
        mode_(mode),
        set_(set),
        cfg_(cfg),
        rng_(seed),
        obs_line_(cfg.delay_horizon + 1),
        act_line_(cfg.delay_horizon + 1) {
    cfg_.validate();
  }

  Obs5 reset() { return begin_episode(env_.reset(rng_)); }

  template <typename Target>
  Obs5 reset_to(const Target& target) {
    return begin_episode(env_.reset_to(target));
  }

  EnvStep step(const Vec2& action) {
    Vec2 u = action;
    if (mode_ == DelayMode::delayed_action) {
      act_line_.push(action);
      u = (k_ < draw_.delay) ? Vec2{0.0, 0.0} : act_line_.read_delayed(draw_.delay);
    }
    if (filter_) u = filter_->apply(u);
    u = apply_disturbance(draw_.disturbance, k_, u, rng_);
    EnvStep inner = env_.step(u);
    ++k_;
    if (mode_ == DelayMode::delayed_observation) {
      obs_line_.push(inner.obs);
      inner.obs = obs_line_.read_delayed(draw_.delay);
    }
    return inner;
  }

  const EpisodeDraw& draw() const { return draw_; }
  DelayMode mode() const { return mode_; }
  RandomizationSet set() const { return set_; }
  Env& inner() { return env_; }
  const Env& inner() const { return env_; }
  int episode_steps() const { return env_.episode_steps(); }
  int step_index() const { return k_; }

 private:
  Obs5 begin_episode(const Obs5& first) {
    draw_ = sample_episode_randomization(set_, cfg_, rng_);
    if (mode_ == DelayMode::none) draw_.delay = 0;
    if (draw_.bandwidth_on)
      filter_.emplace(draw_.cutoff_hz, cfg_.sample_time, LowPass2::Init::first_input);
    else
      filter_.reset();
    obs_line_.clear();
    obs_line_.push(first);
    act_line_.clear();
    k_ = 0;
    return first;
  }

  Env env_;
  DelayMode mode_;
  RandomizationSet set_;
  RandomizationConfig cfg_;
  Rng rng_;
  DelayLine<Obs5> obs_line_;
  DelayLine<Vec2> act_line_;
  std::optional<LowPass2> filter_;
  EpisodeDraw draw_;
  int k_ = 0;
};

inline std::string to_string(DelayMode m) {
  switch (m) {
    case DelayMode::none: return "a";
    case DelayMode::delayed_observation: return "b";
    case DelayMode::delayed_action: return "c";
  }
  return "?";
}

inline std::string to_string(RandomizationSet s) {
  switch (s) {
    case RandomizationSet::none: return "none";
    case RandomizationSet::delay_only: return "I";
    case RandomizationSet::delay_bandwidth: return "II";
    case RandomizationSet::full: return "III";
    case RandomizationSet::step_study: return "step";
  }
  return "?";
}

inline DelayMode delay_mode_from_string(const std::string& s) {
  if (s == "a" || s == "none") return DelayMode::none;
  if (s == "b") return DelayMode::delayed_observation;
  if (s == "c") return DelayMode::delayed_action;
  check(false, "unknown delay mode: " + s);
  return DelayMode::none;
}

inline RandomizationSet randomization_set_from_string(const std::string& s) {
  if (s == "none") return RandomizationSet::none;
  if (s == "I") return RandomizationSet::delay_only;
  if (s == "II") return RandomizationSet::delay_bandwidth;
  if (s == "III") return RandomizationSet::full;
  if (s == "step") return RandomizationSet::step_study;
  check(false, "unknown randomization set: " + s);
  return RandomizationSet::none;
}

}  // namespace reachlab
