#pragma once

#include <optional>

#include "reachlab/augment.hpp"
#include "reachlab/dob.hpp"
#include "reachlab/filters.hpp"

namespace reachlab {

// Agent-side per-episode state: the committed-action window, the optional
// disturbance observer, and the composed observation the policy consumes.
class AgentRuntime {
 public:
  AgentRuntime(const AugmentSpec& spec, const MlpParams* inverse_model,
               const DobConfig& dob_cfg)
      : spec_(spec), actions_(spec.window_len, spec.item_dim) {
    if (spec.repr == Representation::disturbance_augmented)
      observer_.emplace(inverse_model, dob_cfg);
    composed_.assign(static_cast<std::size_t>(spec.observation_dim()), 0.0);
  }

  void begin_episode(const Obs5& first) {
    actions_.clear();
    if (observer_) observer_->begin_episode(first);
    compose_observation(spec_, first, actions_, observer_ ? &*observer_ : nullptr,
                        composed_);
  }

  // Call once per transition with the newly received observation and the
  // action just committed; recomposes the policy observation.
  void after_step(const Obs5& obs, const Vec2& committed) {
    if (observer_) observer_->update(obs, committed);
    actions_.push(std::span<const double>(committed.data(), 2));
    compose_observation(spec_, obs, actions_, observer_ ? &*observer_ : nullptr,
                        composed_);
  }

  const Vec& composed() const { return composed_; }
  const AugmentSpec& spec() const { return spec_; }

 private:
  AugmentSpec spec_;
  HistoryWindow actions_;
  std::optional<DisturbanceObserver> observer_;
  Vec composed_;
};

}  // namespace reachlab
