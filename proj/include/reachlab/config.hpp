#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachlab/augment.hpp"
#include "reachlab/csv.hpp"
#include "reachlab/dob.hpp"
#include "reachlab/env.hpp"
#include "reachlab/pik.hpp"
#include "reachlab/ppo.hpp"
#include "reachlab/randomization.hpp"

namespace reachlab {

// Single structured config for the whole pipeline. Every field has a
// desk-scale default; a JSON file overrides fields selectively, and the
// REACHLAB_SEED / REACHLAB_OUT environment variables (then CLI flags)
// override seed and output directory.
struct RunConfig {
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  long total_steps = 2'000'000;
  long eval_interval = 100'000;
  std::uint64_t eval_seed = 9001;
  std::string out_dir = "runs/out";
  std::string targets_file = "configs/eval_targets.csv";

  Representation repr = Representation::vanilla;
  DelayMode delay_mode = DelayMode::delayed_observation;
  RandomizationSet rset = RandomizationSet::delay_only;

  EnvConfig env;
  RandomizationConfig rand;
  PpoConfig ppo;
  DobConfig dob;
  PikConfig pik;

  int augment_window = 15;  // m
  double reach_radius_m = 0.05;
  double dataset_fraction = 0.25;  // tail share of nominal training logged

  AugmentSpec augment_spec() const {
    AugmentSpec a;
    a.repr = repr;
    a.window_len = augment_window;
    return a;
  }

  void finalize() {
    // the control period is defined once by the environment
    rand.sample_time = env.model.dt();
    dob.sample_time = env.model.dt();
    dob.horizon = augment_window - 1;
    rand.delay_horizon = augment_window - 1;
  }

  void validate() const {
    env.validate();
    rand.validate();
    ppo.validate();
    dob.validate();
    pik.validate();
    check(total_steps >= ppo.batch_size(), "config: total_steps below one batch");
    check(eval_interval >= 1, "config: eval_interval must be >= 1");
    check(!seeds.empty(), "config: need at least one seed");
    check(augment_window >= 1, "config: augment_window must be >= 1");
    check(reach_radius_m > 0.0, "config: reach_radius_m must be > 0");
    check(dataset_fraction > 0.0 && dataset_fraction <= 1.0,
          "config: dataset_fraction in (0, 1]");
    // run-start dimensional contract: vanilla 5, augmented 5 + m * dim(a)
    const AugmentSpec a = augment_spec();
    if (repr == Representation::vanilla)
      check(a.observation_dim() == 5, "config: vanilla observation dim must be 5");
    else
      check(a.observation_dim() == 5 + augment_window * 2,
            "config: augmented observation dim must be 5 + m*2");
  }
};

namespace detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void parse_env(const nlohmann::json& j, EnvConfig& e) {
  maybe(j, "episode_steps", e.episode_steps);
  if (j.contains("home")) {
    const auto v = j.at("home").get<std::vector<double>>();
    check(v.size() == 2, "config: home needs 2 entries");
    e.home = {v[0], v[1]};
  }
  if (j.contains("target_pitch_deg")) {
    const auto v = j.at("target_pitch_deg").get<std::vector<double>>();
    check(v.size() == 2, "config: target_pitch_deg needs 2 entries");
    e.target_pitch_low = deg2rad(v[0]);
    e.target_pitch_high = deg2rad(v[1]);
  }
  if (j.contains("target_yaw_deg")) {
    const auto v = j.at("target_yaw_deg").get<std::vector<double>>();
    check(v.size() == 2, "config: target_yaw_deg needs 2 entries");
    e.target_yaw_low = deg2rad(v[0]);
    e.target_yaw_high = deg2rad(v[1]);
  }
  KinematicModel& m = e.model;
  maybe(j, "base_height", m.base_height);
  maybe(j, "link_length", m.link_length);
  maybe(j, "max_joint_speed", m.max_joint_speed);
  maybe(j, "control_frequency", m.control_frequency);
  if (j.contains("joint_limits_deg")) {
    const auto v = j.at("joint_limits_deg").get<std::vector<std::vector<double>>>();
    check(v.size() == 2 && v[0].size() == 2 && v[1].size() == 2,
          "config: joint_limits_deg needs 2x2 entries");
    for (int i = 0; i < 2; ++i) {
      m.joint_low[i] = deg2rad(v[static_cast<std::size_t>(i)][0]);
      m.joint_high[i] = deg2rad(v[static_cast<std::size_t>(i)][1]);
    }
  }
  if (j.contains("workspace_scale"))
    m.workspace_scale = j.at("workspace_scale").get<double>();
  else
    m.workspace_scale = 2.0 * m.link_length;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  detail::maybe(j, "seeds", c.seeds);
  detail::maybe(j, "total_steps", c.total_steps);
  detail::maybe(j, "eval_interval", c.eval_interval);
  detail::maybe(j, "eval_seed", c.eval_seed);
  detail::maybe(j, "out_dir", c.out_dir);
  detail::maybe(j, "targets_file", c.targets_file);
  if (j.contains("representation"))
    c.repr = representation_from_string(j.at("representation").get<std::string>());
  if (j.contains("delay_mode"))
    c.delay_mode = delay_mode_from_string(j.at("delay_mode").get<std::string>());
  if (j.contains("randomization"))
    c.rset = randomization_set_from_string(j.at("randomization").get<std::string>());
  detail::maybe(j, "augment_window", c.augment_window);
  detail::maybe(j, "reach_radius_m", c.reach_radius_m);
  detail::maybe(j, "dataset_fraction", c.dataset_fraction);
  if (j.contains("env")) detail::parse_env(j.at("env"), c.env);
  if (j.contains("randomization_params")) {
    const auto& r = j.at("randomization_params");
    detail::maybe(r, "bandwidth_low_hz", c.rand.bandwidth_low_hz);
    detail::maybe(r, "bandwidth_high_hz", c.rand.bandwidth_high_hz);
    detail::maybe(r, "gaussian_sigma", c.rand.gaussian_sigma);
    detail::maybe(r, "gaussian_mean_low", c.rand.gaussian_mean_low);
    detail::maybe(r, "gaussian_mean_high", c.rand.gaussian_mean_high);
    detail::maybe(r, "step_magnitude", c.rand.step_magnitude);
    detail::maybe(r, "step_onsets", c.rand.step_onsets);
  }
  if (j.contains("ppo")) {
    const auto& p = j.at("ppo");
    detail::maybe(p, "actors", c.ppo.actors);
    detail::maybe(p, "horizon", c.ppo.horizon);
    detail::maybe(p, "minibatch_size", c.ppo.minibatch_size);
    detail::maybe(p, "epochs", c.ppo.epochs);
    detail::maybe(p, "learning_rate", c.ppo.learning_rate);
    detail::maybe(p, "gamma", c.ppo.gamma);
    detail::maybe(p, "gae_lambda", c.ppo.gae_lambda);
    detail::maybe(p, "clip", c.ppo.clip);
    detail::maybe(p, "value_coef", c.ppo.value_coef);
    detail::maybe(p, "entropy_coef", c.ppo.entropy_coef);
    detail::maybe(p, "anneal_lr", c.ppo.anneal_lr);
    detail::maybe(p, "max_grad_norm", c.ppo.max_grad_norm);
  }
  if (j.contains("dob")) {
    const auto& d = j.at("dob");
    detail::maybe(d, "window", c.dob.window);
    detail::maybe(d, "qfilter_cutoff_hz", c.dob.qfilter_cutoff_hz);
    detail::maybe(d, "batch_size", c.dob.batch_size);
    detail::maybe(d, "epochs", c.dob.epochs);
    detail::maybe(d, "learning_rate", c.dob.learning_rate);
    detail::maybe(d, "val_fraction", c.dob.val_fraction);
    detail::maybe(d, "shuffle", c.dob.shuffle);
    detail::maybe(d, "hidden", c.dob.hidden);
  }
  if (j.contains("pik")) {
    const auto& p = j.at("pik");
    detail::maybe(p, "kp", c.pik.kp);
    detail::maybe(p, "damping", c.pik.damping);
  }
  c.finalize();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "config: cannot open: " + path);
  nlohmann::json j;
  in >> j;
  return parse_config(j);
}

inline void apply_env_overrides(RunConfig& c) {
  if (const char* s = std::getenv("REACHLAB_SEED")) {
    c.seeds = {static_cast<std::uint64_t>(std::stoull(s))};
  }
  if (const char* o = std::getenv("REACHLAB_OUT")) c.out_dir = o;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seeds"] = c.seeds;
  j["total_steps"] = c.total_steps;
  j["eval_interval"] = c.eval_interval;
  j["eval_seed"] = c.eval_seed;
  j["out_dir"] = c.out_dir;
  j["targets_file"] = c.targets_file;
  j["representation"] = to_string(c.repr);
  j["delay_mode"] = to_string(c.delay_mode);
  j["randomization"] = to_string(c.rset);
  j["augment_window"] = c.augment_window;
  j["reach_radius_m"] = c.reach_radius_m;
  j["dataset_fraction"] = c.dataset_fraction;
  j["env"] = {{"episode_steps", c.env.episode_steps},
              {"home", {c.env.home[0], c.env.home[1]}},
              {"base_height", c.env.model.base_height},
              {"link_length", c.env.model.link_length},
              {"max_joint_speed", c.env.model.max_joint_speed},
              {"control_frequency", c.env.model.control_frequency},
              {"workspace_scale", c.env.model.workspace_scale}};
  j["randomization_params"] = {{"bandwidth_low_hz", c.rand.bandwidth_low_hz},
                               {"bandwidth_high_hz", c.rand.bandwidth_high_hz},
                               {"gaussian_sigma", c.rand.gaussian_sigma},
                               {"gaussian_mean_low", c.rand.gaussian_mean_low},
                               {"gaussian_mean_high", c.rand.gaussian_mean_high},
                               {"step_magnitude", c.rand.step_magnitude},
                               {"step_onsets", c.rand.step_onsets}};
  j["ppo"] = {{"actors", c.ppo.actors},
              {"horizon", c.ppo.horizon},
              {"minibatch_size", c.ppo.minibatch_size},
              {"epochs", c.ppo.epochs},
              {"learning_rate", c.ppo.learning_rate},
              {"gamma", c.ppo.gamma},
              {"gae_lambda", c.ppo.gae_lambda},
              {"clip", c.ppo.clip},
              {"value_coef", c.ppo.value_coef},
              {"entropy_coef", c.ppo.entropy_coef},
              {"anneal_lr", c.ppo.anneal_lr},
              {"max_grad_norm", c.ppo.max_grad_norm}};
  j["dob"] = {{"window", c.dob.window},
              {"qfilter_cutoff_hz", c.dob.qfilter_cutoff_hz},
              {"batch_size", c.dob.batch_size},
              {"epochs", c.dob.epochs},
              {"learning_rate", c.dob.learning_rate},
              {"val_fraction", c.dob.val_fraction},
              {"shuffle", c.dob.shuffle},
              {"hidden", c.dob.hidden}};
  j["pik"] = {{"kp", c.pik.kp}, {"damping", c.pik.damping}};
  return j;
}

// Committed evaluation suite: CSV of Cartesian triples with an x,y,z header.
inline std::vector<Vec3> load_targets(const std::string& path, const EnvConfig& env) {
  std::ifstream in(path);
  check(in.good(), "targets: cannot open: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<Vec3> targets;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    Vec3 t;
    char comma;
    ss >> t[0] >> comma >> t[1] >> comma >> t[2];
    check(!ss.fail(), "targets: malformed row: " + line);
    Vec2 q;
    check(inverse_kinematics(env.model, t, q), "targets: unreachable target: " + line);
    targets.push_back(t);
  }
  check(!targets.empty(), "targets: empty suite: " + path);
  return targets;
}

inline void save_targets(const std::string& path, const std::vector<Vec3>& targets) {
  std::ofstream out(path);
  check(out.good(), "targets: cannot open for write: " + path);
  out << "x,y,z\n";
  for (const auto& t : targets)
    out << fmt_double(t[0]) << ',' << fmt_double(t[1]) << ',' << fmt_double(t[2]) << '\n';
}

}  // namespace reachlab
