#pragma once

#include <string>

#include "reachlab/common.hpp"
#include "reachlab/dob.hpp"
#include "reachlab/env.hpp"
#include "reachlab/filters.hpp"

namespace reachlab {

// The three observation representations: plain MDP, action-augmented
// delayed MDP, disturbance-augmented MDP.
enum class Representation { vanilla, action_augmented, disturbance_augmented };

struct AugmentSpec {
  Representation repr = Representation::vanilla;
  int window_len = 15;  // m; both augmentation kinds append m items
  int item_dim = 2;

  int nominal_dim() const { return 5; }
  int augmented_dim() const {
    return repr == Representation::vanilla ? 0 : window_len * item_dim;
  }
  int observation_dim() const { return nominal_dim() + augmented_dim(); }
};

// Pure composition: nominal part first, then the newest-first augmentation
// window (committed actions or disturbance estimates). Windows are all
// zeros at episode start.
inline void compose_observation(const AugmentSpec& spec, const Obs5& obs,
                                const HistoryWindow& action_history,
                                const DisturbanceObserver* observer, Vec& out) {
  out.resize(static_cast<std::size_t>(spec.observation_dim()));
  std::copy(obs.begin(), obs.end(), out.begin());
  switch (spec.repr) {
    case Representation::vanilla:
      break;
    case Representation::action_augmented:
      check(action_history.window_len() == spec.window_len &&
                action_history.item_dim() == spec.item_dim,
            "compose_observation: action history shape mismatch");
      action_history.flatten_into(out.data() + spec.nominal_dim());
      break;
    case Representation::disturbance_augmented:
      check(observer != nullptr, "compose_observation: observer required for damdp");
      check(observer->window_dim() == spec.augmented_dim(),
            "compose_observation: observer window shape mismatch");
      observer->disturbance_window_into(out.data() + spec.nominal_dim());
      break;
  }
}

inline std::string to_string(Representation r) {
  switch (r) {
    case Representation::vanilla: return "vanilla";
    case Representation::action_augmented: return "dmdp";
    case Representation::disturbance_augmented: return "damdp";
  }
  return "?";
}

inline Representation representation_from_string(const std::string& s) {
  if (s == "vanilla") return Representation::vanilla;
  if (s == "dmdp") return Representation::action_augmented;
  if (s == "damdp") return Representation::disturbance_augmented;
  check(false, "unknown representation: " + s);
  return Representation::vanilla;
}

}  // namespace reachlab
