#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "reachlab/config.hpp"
#include "reachlab/csv.hpp"
#include "reachlab/eval.hpp"
#include "reachlab/pik.hpp"
#include "reachlab/rollout.hpp"

namespace reachlab {

constexpr const char* kVersion = "0.1.0";

inline std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "digest: cannot open: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<std::uint8_t>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline void write_manifest(const std::string& dir, const RunConfig& cfg,
                           const std::string& command, std::uint64_t seed,
                           const nlohmann::json& outputs) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config_to_json(cfg);
  j["outputs"] = outputs;
  std::ofstream out(dir + "/manifest.json");
  check(out.good(), "manifest: cannot open for write in " + dir);
  out << j.dump(2) << '\n';
}

inline std::string draw_kind(const DisturbanceSpec& d) {
  switch (d.kind) {
    case DisturbanceKind::none: return "none";
    case DisturbanceKind::gaussian: return "gaussian";
    case DisturbanceKind::step: return "step";
  }
  return "?";
}

// the two disturbance parameters are the per-dimension means (gaussian)
// or step magnitudes
inline std::pair<double, double> draw_params(const DisturbanceSpec& d) {
  if (d.kind == DisturbanceKind::gaussian)
    return {d.gaussian_mean[0], d.gaussian_mean[1]};
  if (d.kind == DisturbanceKind::step)
    return {d.step_magnitude[0], d.step_magnitude[1]};
  return {0.0, 0.0};
}

struct TrainOutputs {
  std::string run_dir;
  std::string checkpoint_path;
  std::string training_log_path;
  std::string eval_records_path;
  std::string eval_curve_path;
  std::string randomization_log_path;
  std::string trajectories_path;
  MetricAggregate final_eval;
  InverseDataset dataset;  // unused by training; kept for symmetry
};

namespace detail {

// deterministic evaluation pass shared by training-time checkpoints and
// the evaluate command
template <typename ActFn>
std::vector<MetricsRecord> eval_pass(const RunConfig& cfg, Representation repr,
                                     DelayMode mode, RandomizationSet set,
                                     const MlpParams* inverse_model,
                                     const std::vector<Vec3>& targets, ActFn&& act,
                                     std::optional<int> pin_onset = {}) {
  EvalScenario sc;
  sc.mode = mode;
  sc.set = set;
  sc.rand = cfg.rand;
  if (pin_onset) sc.rand.step_onsets = {*pin_onset};
  sc.eval_seed = cfg.eval_seed;
  sc.reach_radius_m = cfg.reach_radius_m;
  AugmentSpec aug = cfg.augment_spec();
  aug.repr = repr;
  return evaluate_policy(cfg.env, aug, inverse_model, cfg.dob, targets, sc, act);
}

inline void write_records(CsvWriter& w, long step, const std::vector<MetricsRecord>& recs) {
  for (const auto& r : recs) {
    const auto [p0, p1] = draw_params(r.draw.disturbance);
    w.row({std::to_string(step), std::to_string(r.target_id),
           std::to_string(r.draw.delay), fmt_double(r.draw.cutoff_hz),
           draw_kind(r.draw.disturbance), fmt_double(p0), fmt_double(p1),
           std::to_string(r.draw.disturbance.step_onset), fmt_double(r.npd_m),
           fmt_double(r.rrt_s), fmt_double(r.ss_pct), fmt_double(r.cum_reward)});
  }
}

inline void write_curve_row(CsvWriter& w, long step, const MetricAggregate& a) {
  w.row({std::to_string(step), std::to_string(a.count), fmt_double(a.reward_mean),
         fmt_double(a.reward_sem), fmt_double(a.npd_mean), fmt_double(a.npd_sem),
         fmt_double(a.rrt_mean), fmt_double(a.rrt_sem), fmt_double(a.ss_mean),
         fmt_double(a.ss_sem)});
}

}  // namespace detail

// One PPO training run at the given seed. Evaluates the deterministic
// policy on the committed target suite every eval_interval steps under the
// run's own scenario, and optionally records the trailing share of nominal
// episodes for inverse-model fitting.
inline TrainOutputs run_training(const RunConfig& cfg, std::uint64_t seed,
                                 Representation repr, DelayMode mode,
                                 RandomizationSet set, const MlpParams* inverse_model,
                                 bool log_trajectories, const std::string& run_dir,
                                 bool quiet = false) {
  cfg.validate();
  if (repr == Representation::disturbance_augmented)
    check(inverse_model != nullptr,
          "training: damdp requires a trained inverse-model checkpoint");
  std::filesystem::create_directories(run_dir);

  const std::vector<Vec3> targets = load_targets(cfg.targets_file, cfg.env);

  AugmentSpec aug = cfg.augment_spec();
  aug.repr = repr;
  PolicySpec pspec;
  pspec.augment = aug;
  Rng init_rng(substream_seed(seed, "init"));
  PolicyParams params = init_policy(pspec, init_rng);
  if (!quiet)
    std::cout << "[train] repr=" << to_string(repr) << " mode=" << to_string(mode)
              << " set=" << to_string(set) << " seed=" << seed
              << " obs_dim=" << aug.observation_dim() << std::endl;

  std::vector<RandomizedEnv<ReachEnv>> envs;
  envs.reserve(static_cast<std::size_t>(cfg.ppo.actors));
  for (int i = 0; i < cfg.ppo.actors; ++i)
    envs.emplace_back(ReachEnv(cfg.env), mode, set, cfg.rand,
                      substream_seed(seed, "env", static_cast<std::uint64_t>(i)));
  VecRunner runner(std::move(envs), aug, inverse_model, cfg.dob, seed);

  TrainOutputs out;
  out.run_dir = run_dir;
  out.training_log_path = run_dir + "/training_log.csv";
  out.eval_records_path = run_dir + "/eval_records.csv";
  out.eval_curve_path = run_dir + "/eval_curve.csv";
  out.randomization_log_path = run_dir + "/randomization_train.csv";
  out.checkpoint_path = run_dir + "/policy.ckpt";

  CsvWriter train_log(out.training_log_path,
                      {"iteration", "global_step", "episodes", "mean_episode_reward",
                       "policy_loss", "value_loss", "entropy", "clip_fraction",
                       "approx_kl", "log_std0", "log_std1"});
  CsvWriter records_csv(out.eval_records_path,
                        {"step", "target_id", "h", "fc", "dist_kind", "dist_p0",
                         "dist_p1", "dist_onset", "npd_m", "rrt_s", "ss_pct",
                         "cum_reward"});
  CsvWriter curve_csv(out.eval_curve_path,
                      {"step", "n_targets", "reward_mean", "reward_sem", "npd_mean",
                       "npd_sem", "rrt_mean", "rrt_sem", "ss_mean", "ss_sem"});
  CsvWriter rand_log(out.randomization_log_path,
                     {"actor", "episode", "h", "fc", "dist_kind", "dist_p0",
                      "dist_p1", "dist_onset"});
  runner.set_draw_callback([&](int actor, long episode, const EpisodeDraw& d) {
    const auto [p0, p1] = draw_params(d.disturbance);
    rand_log.row({std::to_string(actor), std::to_string(episode),
                  std::to_string(d.delay), fmt_double(d.cutoff_hz),
                  draw_kind(d.disturbance), fmt_double(p0), fmt_double(p1),
                  std::to_string(d.disturbance.step_onset)});
  });
  std::vector<Episode> recorded;
  if (log_trajectories) {
    out.trajectories_path = run_dir + "/trajectories.bin";
    runner.set_episode_sink([&](Episode&& ep) { recorded.push_back(std::move(ep)); });
  }

  runner.reset_all();
  PolicyAdamState adam = make_policy_adam(params, AdamConfig{cfg.ppo.learning_rate,
                                                             0.9, 0.999, 1e-8});
  PolicyGrads grads = make_policy_grads(params);
  Rng shuffle_rng(substream_seed(seed, "shuffle"));
  RolloutBatch batch;

  const long iterations = cfg.total_steps / cfg.ppo.batch_size();
  const long record_from =
      static_cast<long>((1.0 - cfg.dataset_fraction) * static_cast<double>(cfg.total_steps));
  long global_step = 0;
  long next_eval = cfg.eval_interval;

  auto run_eval = [&](long step) {
    PolicyWorkspace ws;
    auto act = [&](const Vec& obs) {
      policy_features(params, obs, ws);
      return policy_mean(params, ws);
    };
    const auto recs = detail::eval_pass(cfg, repr, mode, set, inverse_model, targets, act);
    detail::write_records(records_csv, step, recs);
    const MetricAggregate agg = aggregate_records(recs);
    detail::write_curve_row(curve_csv, step, agg);
    if (!quiet)
      std::cout << "[eval] step=" << step << " reward=" << agg.reward_mean
                << " npd=" << agg.npd_mean << " rrt=" << agg.rrt_mean
                << " ss=" << agg.ss_mean << std::endl;
    return agg;
  };

  for (long it = 1; it <= iterations; ++it) {
    if (log_trajectories && global_step >= record_from) runner.set_recording_enabled(true);
    if (cfg.ppo.anneal_lr)
      set_policy_lr(adam, cfg.ppo.learning_rate *
                              (1.0 - static_cast<double>(it - 1) / static_cast<double>(iterations)));
    const RolloutStats rs = runner.collect(params, cfg.ppo.horizon, batch);
    global_step += cfg.ppo.batch_size();
    compute_gae(batch, cfg.ppo.gamma, cfg.ppo.gae_lambda);
    const PpoDiagnostics diag =
        ppo_update(params, batch, cfg.ppo, adam, shuffle_rng, grads, run_dir);
    train_log.row({std::to_string(it), std::to_string(global_step),
                   std::to_string(rs.episodes), fmt_double(rs.mean_episode_reward()),
                   fmt_double(diag.policy_loss), fmt_double(diag.value_loss),
                   fmt_double(diag.entropy), fmt_double(diag.clip_fraction),
                   fmt_double(diag.approx_kl), fmt_double(params.log_std[0]),
                   fmt_double(params.log_std[1])});
    if (global_step >= next_eval) {
      out.final_eval = run_eval(global_step);
      while (next_eval <= global_step) next_eval += cfg.eval_interval;
    }
  }
  if (global_step < next_eval && global_step % cfg.eval_interval != 0)
    out.final_eval = run_eval(global_step);

  save_policy(out.checkpoint_path, params);
  if (log_trajectories) save_trajectories(out.trajectories_path, recorded);
  return out;
}

// --- commands ---

inline TrainOutputs cmd_train_nominal(const RunConfig& cfg, std::uint64_t seed) {
  const std::string dir = cfg.out_dir + "/nominal_seed" + std::to_string(seed);
  TrainOutputs out = run_training(cfg, seed, Representation::vanilla, DelayMode::none,
                                  RandomizationSet::none, nullptr, true, dir);
  write_manifest(dir, cfg, "train-nominal", seed,
                 {{"checkpoint", out.checkpoint_path},
                  {"trajectories", out.trajectories_path},
                  {"training_log", out.training_log_path},
                  {"eval_records", out.eval_records_path},
                  {"eval_curve", out.eval_curve_path},
                  {"randomization_log", out.randomization_log_path}});
  return out;
}

struct DobOutputs {
  std::string model_path;
  std::string dataset_path;
  std::string loss_curve_path;
  InverseTrainingResult result;
};

inline DobOutputs cmd_train_dob(const RunConfig& cfg, std::uint64_t seed,
                                const std::string& trajectories_path) {
  cfg.validate();
  const std::string dir = cfg.out_dir + "/dob_seed" + std::to_string(seed);
  std::filesystem::create_directories(dir);
  const auto episodes = load_trajectories(trajectories_path);
  check(!episodes.empty(), "train-dob: no episodes in " + trajectories_path);
  const InverseDataset dataset = build_inverse_dataset(episodes, cfg.dob.window);

  DobOutputs out;
  out.dataset_path = dir + "/inverse_dataset.bin";
  out.model_path = dir + "/inverse_model.ckpt";
  out.loss_curve_path = dir + "/inverse_loss.csv";
  dataset.save(out.dataset_path);
  out.result = train_inverse_model(dataset, cfg.dob, seed);

  CsvWriter loss_csv(out.loss_curve_path, {"epoch", "train_mse", "val_mse"});
  for (std::size_t e = 0; e < out.result.train_loss.size(); ++e)
    loss_csv.row({std::to_string(e + 1), fmt_double(out.result.train_loss[e]),
                  fmt_double(out.result.val_loss[e])});

  Checkpoint ckpt;
  ckpt.strings["kind"] = "inverse_model";
  ckpt.mlps["inverse_model"] = out.result.model;
  ckpt.vectors["meta"] = {static_cast<double>(cfg.dob.window),
                          static_cast<double>(cfg.dob.horizon),
                          cfg.dob.qfilter_cutoff_hz, cfg.dob.sample_time};
  ckpt.save(out.model_path);
  write_manifest(dir, cfg, "train-dob", seed,
                 {{"model", out.model_path},
                  {"dataset", out.dataset_path},
                  {"loss_curve", out.loss_curve_path},
                  {"trajectories_input", trajectories_path},
                  {"final_val_mse", out.result.final_val_mse()}});
  return out;
}

inline MlpParams load_inverse_model(const std::string& path, const DobConfig& dob) {
  const Checkpoint c = Checkpoint::load(path);
  check(c.string("kind") == "inverse_model", "not an inverse-model checkpoint: " + path);
  MlpParams m = c.mlp("inverse_model");
  check(m.spec.input_width() == dob.input_dim(),
        "inverse model window does not match the configured observer");
  return m;
}

inline TrainOutputs cmd_train_robust(const RunConfig& cfg, std::uint64_t seed,
                                     const std::string& dob_checkpoint) {
  check(cfg.rset != RandomizationSet::none, "train-robust: randomization set required");
  check(cfg.delay_mode != DelayMode::none, "train-robust: delay mode b or c required");
  std::optional<MlpParams> inverse;
  if (cfg.repr == Representation::disturbance_augmented) {
    check(!dob_checkpoint.empty(),
          "train-robust: damdp requires --dob <inverse model checkpoint>");
    inverse = load_inverse_model(dob_checkpoint, cfg.dob);
  }
  const std::string dir = cfg.out_dir + "/robust_" + to_string(cfg.repr) + "_" +
                          to_string(cfg.delay_mode) + "_" + to_string(cfg.rset) +
                          "_seed" + std::to_string(seed);
  TrainOutputs out = run_training(cfg, seed, cfg.repr, cfg.delay_mode, cfg.rset,
                                  inverse ? &*inverse : nullptr, false, dir);
  write_manifest(dir, cfg, "train-robust", seed,
                 {{"checkpoint", out.checkpoint_path},
                  {"dob_checkpoint", dob_checkpoint},
                  {"training_log", out.training_log_path},
                  {"eval_records", out.eval_records_path},
                  {"eval_curve", out.eval_curve_path},
                  {"randomization_log", out.randomization_log_path}});
  return out;
}

struct EvaluateArgs {
  std::string policy = "checkpoint";  // or "pik"
  std::string checkpoint_path;
  std::string dob_checkpoint;
  std::optional<Representation> expected_repr;
  DelayMode mode = DelayMode::delayed_observation;
  RandomizationSet set = RandomizationSet::none;
  std::optional<int> step_onset;
  std::string label;
};

struct EvalOutputs {
  std::string records_path;
  std::string aggregate_path;
  std::vector<MetricsRecord> records;
  MetricAggregate aggregate;
  std::string label;
};

inline EvalOutputs cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& args) {
  cfg.validate();
  const std::vector<Vec3> targets = load_targets(cfg.targets_file, cfg.env);

  Representation repr = Representation::vanilla;
  std::optional<PolicyParams> params;
  std::optional<MlpParams> inverse;
  if (args.policy == "pik") {
    check(args.expected_repr.value_or(Representation::vanilla) == Representation::vanilla,
          "evaluate: P-IK runs on the nominal observation only");
  } else {
    check(args.policy == "checkpoint", "evaluate: --policy must be checkpoint or pik");
    check(!args.checkpoint_path.empty(), "evaluate: --checkpoint required");
    params = load_policy(args.checkpoint_path);
    repr = params->spec.augment.repr;
    if (args.expected_repr && *args.expected_repr != repr)
      check(false, "evaluate: checkpoint observation dim " +
                       std::to_string(params->spec.observation_dim()) +
                       " does not match requested representation " +
                       to_string(*args.expected_repr));
    if (repr == Representation::disturbance_augmented) {
      check(!args.dob_checkpoint.empty(),
            "evaluate: damdp checkpoint requires --dob <inverse model checkpoint>");
      inverse = load_inverse_model(args.dob_checkpoint, cfg.dob);
    }
  }

  EvalOutputs out;
  out.label = !args.label.empty()
                  ? args.label
                  : (args.policy == "pik" ? std::string("pik") : to_string(repr));
  std::filesystem::create_directories(cfg.out_dir);
  out.records_path = cfg.out_dir + "/eval_records_" + out.label + ".csv";
  out.aggregate_path = cfg.out_dir + "/eval_aggregate_" + out.label + ".csv";

  const ReachEnv conv_env(cfg.env);  // observation/joint conversions for P-IK
  PolicyWorkspace ws;
  auto act = [&](const Vec& obs) -> Vec2 {
    if (params) {
      policy_features(*params, obs, ws);
      return policy_mean(*params, ws);
    }
    Obs5 nominal;
    std::copy(obs.begin(), obs.begin() + 5, nominal.begin());
    return pik_act_from_obs(cfg.env.model, cfg.pik, conv_env, nominal);
  };
  out.records = detail::eval_pass(cfg, repr, args.mode, args.set,
                                  inverse ? &*inverse : nullptr, targets, act,
                                  args.step_onset);
  out.aggregate = aggregate_records(out.records);

  CsvWriter records_csv(out.records_path,
                        {"step", "target_id", "h", "fc", "dist_kind", "dist_p0",
                         "dist_p1", "dist_onset", "npd_m", "rrt_s", "ss_pct",
                         "cum_reward"});
  detail::write_records(records_csv, 0, out.records);
  CsvWriter agg_csv(out.aggregate_path,
                    {"label", "mode", "set", "n_targets", "reward_mean", "reward_sem",
                     "npd_mean", "npd_sem", "rrt_mean", "rrt_sem", "ss_mean", "ss_sem"});
  const MetricAggregate& a = out.aggregate;
  agg_csv.row({out.label, to_string(args.mode), to_string(args.set),
               std::to_string(a.count), fmt_double(a.reward_mean),
               fmt_double(a.reward_sem), fmt_double(a.npd_mean), fmt_double(a.npd_sem),
               fmt_double(a.rrt_mean), fmt_double(a.rrt_sem), fmt_double(a.ss_mean),
               fmt_double(a.ss_sem)});
  write_manifest(cfg.out_dir, cfg, "evaluate", cfg.eval_seed,
                 {{"policy", args.policy},
                  {"checkpoint", args.checkpoint_path},
                  {"dob_checkpoint", args.dob_checkpoint},
                  {"mode", to_string(args.mode)},
                  {"set", to_string(args.set)},
                  {"records", out.records_path},
                  {"aggregate", out.aggregate_path}});
  return out;
}

}  // namespace reachlab
