#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "reachlab/augment.hpp"
#include "reachlab/checkpoint.hpp"
#include "reachlab/common.hpp"
#include "reachlab/nn.hpp"
#include "reachlab/rng.hpp"

namespace reachlab {

constexpr double kLogTwoPi = 1.8378770664093453;

// Mid-fusion actor-critic: the nominal 5 observation entries pass through
// raw, the augmentation window goes through one tanh dense layer, and the
// concatenation feeds separate actor and critic heads (no shared trunk).
struct PolicySpec {
  AugmentSpec augment;
  int extractor_width = 64;
  std::vector<int> head_hidden = {64, 64};
  int action_dim = 2;

  bool has_extractor() const { return augment.repr != Representation::vanilla; }
  int feature_dim() const {
    return augment.nominal_dim() + (has_extractor() ? extractor_width : 0);
  }
  int observation_dim() const { return augment.observation_dim(); }
};

struct PolicyParams {
  PolicySpec spec;
  std::optional<MlpParams> extractor;  // aug_dim -> extractor_width, tanh out
  MlpParams actor;                     // feature_dim -> hidden -> action_dim
  MlpParams critic;                    // feature_dim -> hidden -> 1
  Vec log_std;                         // state-independent, per action dim
};

struct PolicyGrads {
  std::optional<MlpGrads> extractor;
  MlpGrads actor;
  MlpGrads critic;
  Vec log_std;
};

inline MlpSpec head_spec(const PolicySpec& s, int out_dim) {
  MlpSpec spec;
  spec.widths.push_back(s.feature_dim());
  for (int h : s.head_hidden) spec.widths.push_back(h);
  spec.widths.push_back(out_dim);
  return spec;
}

// Orthogonal init, gain sqrt(2) on hidden layers, 0.01 on the action head
// so initial actions are near zero, 1.0 on the value head.
inline PolicyParams init_policy(const PolicySpec& spec, Rng& rng) {
  PolicyParams p;
  p.spec = spec;
  if (spec.has_extractor()) {
    MlpSpec ext;
    ext.widths = {spec.augment.augmented_dim(), spec.extractor_width};
    ext.output_activation = Activation::tanh;
    p.extractor = init_mlp(ext, rng, std::sqrt(2.0), std::sqrt(2.0));
  }
  p.actor = init_mlp(head_spec(spec, spec.action_dim), rng, std::sqrt(2.0), 0.01);
  p.critic = init_mlp(head_spec(spec, 1), rng, std::sqrt(2.0), 1.0);
  p.log_std.assign(static_cast<std::size_t>(spec.action_dim), 0.0);
  return p;
}

inline PolicyGrads make_policy_grads(const PolicyParams& p) {
  PolicyGrads g;
  if (p.extractor) g.extractor = make_zero_params(p.extractor->spec);
  g.actor = make_zero_params(p.actor.spec);
  g.critic = make_zero_params(p.critic.spec);
  g.log_std.assign(p.log_std.size(), 0.0);
  return g;
}

inline void zero_policy_grads(PolicyGrads& g) {
  if (g.extractor) zero_grads(*g.extractor);
  zero_grads(g.actor);
  zero_grads(g.critic);
  std::fill(g.log_std.begin(), g.log_std.end(), 0.0);
}

struct PolicyWorkspace {
  MlpWorkspace extractor;
  MlpWorkspace actor;
  MlpWorkspace critic;
  Vec features;
};

// Builds (and caches) the fused features for one observation.
inline void policy_features(const PolicyParams& p, const Vec& obs, PolicyWorkspace& ws) {
  check(static_cast<int>(obs.size()) == p.spec.observation_dim(),
        "policy: observation dimension mismatch");
  const int nom = p.spec.augment.nominal_dim();
  ws.features.assign(static_cast<std::size_t>(p.spec.feature_dim()), 0.0);
  std::copy(obs.begin(), obs.begin() + nom, ws.features.begin());
  if (p.extractor) {
    Vec aug(obs.begin() + nom, obs.end());
    const Vec& f = mlp_forward(*p.extractor, aug, ws.extractor);
    std::copy(f.begin(), f.end(), ws.features.begin() + nom);
  }
}

inline Vec2 policy_mean(const PolicyParams& p, PolicyWorkspace& ws) {
  const Vec& m = mlp_forward(p.actor, ws.features, ws.actor);
  return {m[0], m[1]};
}

inline double policy_value(const PolicyParams& p, PolicyWorkspace& ws) {
  return mlp_forward(p.critic, ws.features, ws.critic)[0];
}

inline double gaussian_log_prob(const Vec2& a, const Vec2& mean, const Vec& log_std) {
  double lp = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double s = std::exp(log_std[static_cast<std::size_t>(i)]);
    const double z = (a[i] - mean[i]) / s;
    lp += -0.5 * z * z - log_std[static_cast<std::size_t>(i)] - 0.5 * kLogTwoPi;
  }
  return lp;
}

inline double policy_entropy(const Vec& log_std) {
  double h = 0.0;
  for (double ls : log_std) h += ls + 0.5 * (1.0 + kLogTwoPi);
  return h;
}

struct ActResult {
  Vec2 action;      // clipped to [-1, 1], what the plant is commanded
  Vec2 raw_action;  // pre-clip Gaussian sample, what the batch stores
  double log_prob = 0.0;  // of raw_action, computed pre-clipping
  double value = 0.0;
};

inline ActResult policy_act(const PolicyParams& p, const Vec& obs, Rng& rng,
                            bool deterministic, PolicyWorkspace& ws) {
  policy_features(p, obs, ws);
  const Vec2 mean = policy_mean(p, ws);
  ActResult r;
  if (deterministic) {
    r.raw_action = mean;
  } else {
    for (int i = 0; i < 2; ++i)
      r.raw_action[i] = mean[i] + std::exp(p.log_std[static_cast<std::size_t>(i)]) * rng.normal();
  }
  r.action = {clip(r.raw_action[0], -1.0, 1.0), clip(r.raw_action[1], -1.0, 1.0)};
  r.log_prob = gaussian_log_prob(r.raw_action, mean, p.log_std);
  r.value = policy_value(p, ws);
  return r;
}

inline ActResult policy_act(const PolicyParams& p, const Vec& obs, Rng& rng,
                            bool deterministic = false) {
  PolicyWorkspace ws;
  return policy_act(p, obs, rng, deterministic, ws);
}

// Backprop for one sample given gradients on the action mean and the value.
// Both head input-gradients meet at the fused features; only the augmented
// slice flows back into the extractor (the nominal slice has no parameters
// upstream).
inline void policy_backward(const PolicyParams& p, PolicyWorkspace& ws,
                            const Vec2& mean_grad, double value_grad,
                            PolicyGrads& grads) {
  const Vec ga = mlp_backward(p.actor, ws.actor, Vec{mean_grad[0], mean_grad[1]}, grads.actor);
  const Vec gc = mlp_backward(p.critic, ws.critic, Vec{value_grad}, grads.critic);
  if (p.extractor) {
    const int nom = p.spec.augment.nominal_dim();
    Vec gf(static_cast<std::size_t>(p.spec.extractor_width));
    for (std::size_t i = 0; i < gf.size(); ++i)
      gf[i] = ga[static_cast<std::size_t>(nom) + i] + gc[static_cast<std::size_t>(nom) + i];
    mlp_backward(*p.extractor, ws.extractor, gf, *grads.extractor);
  }
}

struct PolicyAdamState {
  std::optional<AdamState> extractor;
  AdamState actor;
  AdamState critic;
  AdamArray log_std;
  AdamConfig cfg;
  long step = 0;
};

inline PolicyAdamState make_policy_adam(const PolicyParams& p, const AdamConfig& cfg) {
  PolicyAdamState s;
  s.cfg = cfg;
  if (p.extractor) s.extractor = make_adam_state(*p.extractor, cfg);
  s.actor = make_adam_state(p.actor, cfg);
  s.critic = make_adam_state(p.critic, cfg);
  s.log_std.m.assign(p.log_std.size(), 0.0);
  s.log_std.v.assign(p.log_std.size(), 0.0);
  return s;
}

inline void policy_adam_step(PolicyParams& p, const PolicyGrads& g, PolicyAdamState& s) {
  check(all_finite(g.log_std), "policy adam: non-finite gradient");
  if (p.extractor) adam_step(*p.extractor, *g.extractor, *s.extractor);
  adam_step(p.actor, g.actor, s.actor);
  adam_step(p.critic, g.critic, s.critic);
  s.step += 1;
  const double bc1 = 1.0 - std::pow(s.cfg.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.cfg.beta2, static_cast<double>(s.step));
  adam_update_array(p.log_std, g.log_std, s.log_std, s.cfg, bc1, bc2);
}

// Applies fn to every parameter array; used by the finite-difference checks
// and by parameter digests.
template <typename Fn>
void for_each_param_array(PolicyParams& p, Fn&& fn) {
  if (p.extractor)
    for (auto& l : p.extractor->layers) {
      fn(l.w);
      fn(l.b);
    }
  for (auto& l : p.actor.layers) {
    fn(l.w);
    fn(l.b);
  }
  for (auto& l : p.critic.layers) {
    fn(l.w);
    fn(l.b);
  }
  fn(p.log_std);
}

template <typename Fn>
void for_each_grad_array(PolicyGrads& g, Fn&& fn) {
  if (g.extractor)
    for (auto& l : g.extractor->layers) {
      fn(l.w);
      fn(l.b);
    }
  for (auto& l : g.actor.layers) {
    fn(l.w);
    fn(l.b);
  }
  for (auto& l : g.critic.layers) {
    fn(l.w);
    fn(l.b);
  }
  fn(g.log_std);
}

inline void save_policy(const std::string& path, const PolicyParams& p) {
  Checkpoint c;
  c.strings["kind"] = "policy";
  c.strings["representation"] = to_string(p.spec.augment.repr);
  c.vectors["meta"] = {static_cast<double>(p.spec.augment.window_len),
                       static_cast<double>(p.spec.extractor_width),
                       static_cast<double>(p.spec.action_dim)};
  if (p.extractor) c.mlps["extractor"] = *p.extractor;
  c.mlps["actor"] = p.actor;
  c.mlps["critic"] = p.critic;
  c.vectors["log_std"] = p.log_std;
  c.save(path);
}

inline PolicyParams load_policy(const std::string& path) {
  const Checkpoint c = Checkpoint::load(path);
  check(c.string("kind") == "policy", "checkpoint is not a policy: " + path);
  PolicyParams p;
  p.spec.augment.repr = representation_from_string(c.string("representation"));
  const Vec& meta = c.vector("meta");
  p.spec.augment.window_len = static_cast<int>(meta[0]);
  p.spec.extractor_width = static_cast<int>(meta[1]);
  p.spec.action_dim = static_cast<int>(meta[2]);
  p.actor = c.mlp("actor");
  p.critic = c.mlp("critic");
  p.log_std = c.vector("log_std");
  p.spec.head_hidden.assign(p.actor.spec.widths.begin() + 1, p.actor.spec.widths.end() - 1);
  if (p.spec.has_extractor()) p.extractor = c.mlp("extractor");
  return p;
}

}  // namespace reachlab
