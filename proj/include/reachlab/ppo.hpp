#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "reachlab/common.hpp"
#include "reachlab/policy.hpp"
#include "reachlab/rng.hpp"

namespace reachlab {

struct PpoConfig {
  int actors = 64;
  int horizon = 256;       // T
  int minibatch_size = 512;
  int epochs = 10;
  double learning_rate = 2.5e-4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.1;          // epsilon
  double value_coef = 0.5;    // c1
  double entropy_coef = 0.0;  // c2
  bool anneal_lr = false;
  double max_grad_norm = 0.0;  // 0 disables clipping

  int batch_size() const { return actors * horizon; }
  void validate() const {
    check(actors >= 1 && horizon >= 1, "ppo: actors and horizon must be >= 1");
    check(minibatch_size >= 1, "ppo: minibatch_size must be >= 1");
    check(batch_size() % minibatch_size == 0,
          "ppo: actors*horizon must be divisible by minibatch_size");
    check(epochs >= 1, "ppo: epochs must be >= 1");
    check(clip > 0.0, "ppo: clip must be > 0");
  }
};

// Actor-major storage: index = actor*horizon + t, so the GAE backward scan
// runs over contiguous memory.
struct RolloutBatch {
  int actors = 0;
  int horizon = 0;
  int obs_dim = 0;
  int action_dim = 2;
  Vec obs;          // [actors*T, obs_dim]
  Vec raw_actions;  // [actors*T, action_dim], pre-clip samples
  Vec log_probs;    // [actors*T]
  Vec rewards;      // [actors*T]
  Vec values;       // [actors*T]
  std::vector<std::uint8_t> dones;  // [actors*T], transition ended episode
  Vec bootstrap_values;             // [actors], critic value after last step
  Vec advantages;   // [actors*T]
  Vec returns;      // [actors*T]

  int size() const { return actors * horizon; }

  void resize(int a, int t, int od) {
    actors = a;
    horizon = t;
    obs_dim = od;
    const std::size_t n = static_cast<std::size_t>(a) * t;
    obs.assign(n * static_cast<std::size_t>(od), 0.0);
    raw_actions.assign(n * static_cast<std::size_t>(action_dim), 0.0);
    log_probs.assign(n, 0.0);
    rewards.assign(n, 0.0);
    values.assign(n, 0.0);
    dones.assign(n, 0);
    bootstrap_values.assign(static_cast<std::size_t>(a), 0.0);
    advantages.assign(n, 0.0);
    returns.assign(n, 0.0);
  }
};

// Truncated GAE: A_k = sum_j (gamma*lambda)^j delta_{k+j}, cut at episode
// ends and at the horizon (where the critic bootstraps the tail).
inline void compute_gae(RolloutBatch& b, double gamma, double lam) {
  for (int a = 0; a < b.actors; ++a) {
    double lastgaelam = 0.0;
    const std::size_t base = static_cast<std::size_t>(a) * b.horizon;
    for (int t = b.horizon - 1; t >= 0; --t) {
      const std::size_t i = base + static_cast<std::size_t>(t);
      const double nonterminal = b.dones[i] ? 0.0 : 1.0;
      const double next_value =
          (t == b.horizon - 1) ? b.bootstrap_values[static_cast<std::size_t>(a)]
                               : b.values[i + 1];
      const double delta = b.rewards[i] + gamma * next_value * nonterminal - b.values[i];
      lastgaelam = delta + gamma * lam * nonterminal * lastgaelam;
      b.advantages[i] = lastgaelam;
      b.returns[i] = b.advantages[i] + b.values[i];
    }
  }
}

// In-place batch normalization to zero mean, unit variance.
inline void normalize_advantages(Vec& adv) {
  const double n = static_cast<double>(adv.size());
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double std = std::max(std::sqrt(var / n), 1e-8);
  for (double& a : adv) a = (a - mean) / std;
}

struct PpoDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double total_loss = 0.0;
};

// Loss of one minibatch with the batch's (already normalized) advantages:
//   -mean(min(ratio*A, clip(ratio)*A)) + c1*mean((V-R)^2) - c2*entropy.
// Forward-only twin of the gradient path below; the finite-difference
// suite drives this function.
inline double ppo_minibatch_loss(const PolicyParams& p, const RolloutBatch& b,
                                 std::span<const int> idx, const PpoConfig& cfg,
                                 PolicyWorkspace& ws) {
  double surrogate = 0.0, vloss = 0.0;
  Vec obs(static_cast<std::size_t>(b.obs_dim));
  for (int i : idx) {
    const std::size_t ii = static_cast<std::size_t>(i);
    std::copy(b.obs.begin() + ii * b.obs_dim, b.obs.begin() + (ii + 1) * b.obs_dim,
              obs.begin());
    policy_features(p, obs, ws);
    const Vec2 mean = policy_mean(p, ws);
    const double value = policy_value(p, ws);
    const Vec2 a = {b.raw_actions[ii * 2], b.raw_actions[ii * 2 + 1]};
    const double logp = gaussian_log_prob(a, mean, p.log_std);
    const double ratio = std::exp(logp - b.log_probs[ii]);
    const double adv = b.advantages[ii];
    const double u1 = ratio * adv;
    const double u2 = clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
    surrogate += std::min(u1, u2);
    const double ve = value - b.returns[ii];
    vloss += ve * ve;
  }
  const double m = static_cast<double>(idx.size());
  return -surrogate / m + cfg.value_coef * vloss / m -
         cfg.entropy_coef * policy_entropy(p.log_std);
}

struct MinibatchStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// Analytic gradients of ppo_minibatch_loss, accumulated into `grads`.
inline MinibatchStats ppo_minibatch_grads(const PolicyParams& p, const RolloutBatch& b,
                                          std::span<const int> idx, const PpoConfig& cfg,
                                          PolicyGrads& grads, PolicyWorkspace& ws) {
  zero_policy_grads(grads);
  MinibatchStats st;
  const double m = static_cast<double>(idx.size());
  Vec obs(static_cast<std::size_t>(b.obs_dim));
  int clipped = 0;
  for (int i : idx) {
    const std::size_t ii = static_cast<std::size_t>(i);
    std::copy(b.obs.begin() + ii * b.obs_dim, b.obs.begin() + (ii + 1) * b.obs_dim,
              obs.begin());
    policy_features(p, obs, ws);
    const Vec2 mean = policy_mean(p, ws);
    const double value = policy_value(p, ws);
    const Vec2 a = {b.raw_actions[ii * 2], b.raw_actions[ii * 2 + 1]};
    const double logp = gaussian_log_prob(a, mean, p.log_std);
    const double logratio = logp - b.log_probs[ii];
    const double ratio = std::exp(logratio);
    const double adv = b.advantages[ii];
    const double u1 = ratio * adv;
    const double u2 = clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
    st.policy_loss += -std::min(u1, u2) / m;
    st.approx_kl += ((ratio - 1.0) - logratio) / m;
    if (std::abs(ratio - 1.0) > cfg.clip) ++clipped;

    // d(-min(u1,u2))/dlogp: the clipped branch is constant in the params
    const double dlogp = (u1 <= u2) ? -adv * ratio / m : 0.0;

    Vec2 mean_grad;
    for (int d = 0; d < 2; ++d) {
      const double s = std::exp(p.log_std[static_cast<std::size_t>(d)]);
      const double z = (a[d] - mean[d]) / s;
      mean_grad[d] = dlogp * z / s;
      grads.log_std[static_cast<std::size_t>(d)] +=
          dlogp * (z * z - 1.0) - cfg.entropy_coef / m;
    }
    const double ve = value - b.returns[ii];
    st.value_loss += ve * ve / m;
    const double value_grad = cfg.value_coef * 2.0 * ve / m;
    policy_backward(p, ws, mean_grad, value_grad, grads);
  }
  st.clip_fraction = static_cast<double>(clipped) / m;
  st.loss = st.policy_loss + cfg.value_coef * st.value_loss -
            cfg.entropy_coef * policy_entropy(p.log_std);
  return st;
}

inline double policy_grad_norm(PolicyGrads& g) {
  double sq = 0.0;
  for_each_grad_array(g, [&](Vec& v) {
    for (double x : v) sq += x * x;
  });
  return std::sqrt(sq);
}

inline void set_policy_lr(PolicyAdamState& s, double lr) {
  s.cfg.learning_rate = lr;
  if (s.extractor) s.extractor->cfg.learning_rate = lr;
  s.actor.cfg.learning_rate = lr;
  s.critic.cfg.learning_rate = lr;
}

inline void dump_minibatch(const std::string& path, const RolloutBatch& b,
                           std::span<const int> idx) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) return;
  const std::uint64_t n = idx.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (int i : idx) {
    const std::size_t ii = static_cast<std::size_t>(i);
    out.write(reinterpret_cast<const char*>(b.obs.data() + ii * b.obs_dim),
              static_cast<std::streamsize>(sizeof(double) * b.obs_dim));
    out.write(reinterpret_cast<const char*>(b.raw_actions.data() + ii * 2),
              sizeof(double) * 2);
    out.write(reinterpret_cast<const char*>(&b.log_probs[ii]), sizeof(double));
    out.write(reinterpret_cast<const char*>(&b.advantages[ii]), sizeof(double));
    out.write(reinterpret_cast<const char*>(&b.returns[ii]), sizeof(double));
  }
}

// Epoch/minibatch schedule over a collected batch. Advantages are
// normalized once per batch before the first epoch.
inline PpoDiagnostics ppo_update(PolicyParams& p, RolloutBatch& b, const PpoConfig& cfg,
                                 PolicyAdamState& adam, Rng& shuffle_rng,
                                 PolicyGrads& grads, const std::string& dump_dir = "") {
  cfg.validate();
  check(b.size() > 0 && b.size() % cfg.minibatch_size == 0,
        "ppo_update: batch size must be a positive multiple of minibatch_size");
  normalize_advantages(b.advantages);
  std::vector<int> order(static_cast<std::size_t>(b.size()));
  std::iota(order.begin(), order.end(), 0);

  PolicyWorkspace ws;
  PpoDiagnostics diag;
  int minibatches = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    for (int start = 0; start < b.size(); start += cfg.minibatch_size) {
      const std::span<const int> idx(order.data() + start,
                                     static_cast<std::size_t>(cfg.minibatch_size));
      const MinibatchStats st = ppo_minibatch_grads(p, b, idx, cfg, grads, ws);
      if (!std::isfinite(st.loss)) {
        std::string dumped;
        if (!dump_dir.empty()) {
          dumped = dump_dir + "/bad_minibatch.bin";
          dump_minibatch(dumped, b, idx);
        }
        throw std::runtime_error("ppo_update: non-finite loss at epoch " +
                                 std::to_string(epoch) +
                                 (dumped.empty() ? "" : ", minibatch dumped to " + dumped));
      }
      if (cfg.max_grad_norm > 0.0) {
        const double gn = policy_grad_norm(grads);
        if (gn > cfg.max_grad_norm) {
          const double scale = cfg.max_grad_norm / gn;
          for_each_grad_array(grads, [&](Vec& v) {
            for (double& x : v) x *= scale;
          });
        }
      }
      policy_adam_step(p, grads, adam);
      diag.policy_loss += st.policy_loss;
      diag.value_loss += st.value_loss;
      diag.clip_fraction += st.clip_fraction;
      diag.approx_kl += st.approx_kl;
      diag.total_loss += st.loss;
      ++minibatches;
    }
  }
  const double inv = 1.0 / static_cast<double>(minibatches);
  diag.policy_loss *= inv;
  diag.value_loss *= inv;
  diag.clip_fraction *= inv;
  diag.approx_kl *= inv;
  diag.total_loss *= inv;
  diag.entropy = policy_entropy(p.log_std);
  return diag;
}

}  // namespace reachlab
