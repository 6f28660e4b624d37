// Command-line front end for the reach-and-balance training pipeline:
// train-nominal -> train-dob -> train-robust -> evaluate, plus the P-IK
// baseline. See README.md for the file formats each command emits.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "reachlab/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

reachlab::RunConfig resolve_config(const CommonArgs& a) {
  reachlab::RunConfig cfg =
      a.config_path.empty() ? reachlab::RunConfig{} : reachlab::load_config(a.config_path);
  cfg.finalize();
  reachlab::apply_env_overrides(cfg);
  if (a.seed) cfg.seeds = {*a.seed};
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config file");
  cmd->add_option("--seed", a.seed, "run seed (overrides config seed list)");
  cmd->add_option("--out", a.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reachlab: disturbance-aware RL lab for a 2-joint reaching task"};
  app.require_subcommand(1);

  CommonArgs nominal_args;
  auto* nominal = app.add_subcommand("train-nominal",
                                     "PPO on the undisturbed, undelayed task; logs "
                                     "trajectories for the inverse model");
  add_common(nominal, nominal_args);

  CommonArgs dob_args;
  std::string trajectories;
  auto* dob = app.add_subcommand("train-dob", "fit the inverse model from nominal logs");
  add_common(dob, dob_args);
  dob->add_option("--trajectories", trajectories, "nominal trajectory log (.bin)")
      ->required();

  CommonArgs robust_args;
  std::string repr_flag = "vanilla", mode_flag = "b", set_flag = "I", dob_ckpt;
  auto* robust = app.add_subcommand("train-robust",
                                    "PPO on the randomized task for one representation");
  add_common(robust, robust_args);
  robust->add_option("--representation", repr_flag, "vanilla|dmdp|damdp");
  robust->add_option("--delay-mode", mode_flag, "b|c");
  robust->add_option("--randomization", set_flag, "I|II|III|step");
  robust->add_option("--dob", dob_ckpt, "inverse-model checkpoint (required for damdp)");

  CommonArgs eval_args;
  std::string policy_flag = "checkpoint", ckpt_path, eval_dob_ckpt, eval_repr,
              eval_mode = "b", eval_set = "none", label;
  std::optional<int> step_onset;
  auto* evaluate = app.add_subcommand("evaluate",
                                      "run the 50-target suite under a scenario");
  add_common(evaluate, eval_args);
  evaluate->add_option("--policy", policy_flag, "checkpoint|pik");
  evaluate->add_option("--checkpoint", ckpt_path, "policy checkpoint");
  evaluate->add_option("--dob", eval_dob_ckpt, "inverse-model checkpoint for damdp");
  evaluate->add_option("--representation", eval_repr,
                       "expected representation (errors on mismatch)");
  evaluate->add_option("--delay-mode", eval_mode, "a|b|c");
  evaluate->add_option("--randomization", eval_set, "none|I|II|III|step");
  evaluate->add_option("--step-onset", step_onset, "pin the step onset (0 or 500)");
  evaluate->add_option("--label", label, "row label in the aggregate CSV");

  CommonArgs base_args;
  std::string base_mode = "b", base_set = "none", base_label = "pik";
  std::optional<int> base_onset;
  auto* baseline = app.add_subcommand("baseline", "evaluate the P-IK controller");
  add_common(baseline, base_args);
  baseline->add_option("--delay-mode", base_mode, "a|b|c");
  baseline->add_option("--randomization", base_set, "none|I|II|III|step");
  baseline->add_option("--step-onset", base_onset, "pin the step onset (0 or 500)");
  baseline->add_option("--label", base_label, "row label in the aggregate CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (nominal->parsed()) {
      const auto cfg = resolve_config(nominal_args);
      for (auto seed : cfg.seeds) reachlab::cmd_train_nominal(cfg, seed);
    } else if (dob->parsed()) {
      const auto cfg = resolve_config(dob_args);
      const auto out = reachlab::cmd_train_dob(cfg, cfg.seeds.front(), trajectories);
      std::cout << "inverse model: " << out.model_path
                << " (val mse " << out.result.final_val_mse() << ")" << std::endl;
    } else if (robust->parsed()) {
      auto cfg = resolve_config(robust_args);
      cfg.repr = reachlab::representation_from_string(repr_flag);
      cfg.delay_mode = reachlab::delay_mode_from_string(mode_flag);
      cfg.rset = reachlab::randomization_set_from_string(set_flag);
      for (auto seed : cfg.seeds) reachlab::cmd_train_robust(cfg, seed, dob_ckpt);
    } else if (evaluate->parsed() || baseline->parsed()) {
      const bool is_baseline = baseline->parsed();
      const auto cfg = resolve_config(is_baseline ? base_args : eval_args);
      reachlab::EvaluateArgs args;
      args.policy = is_baseline ? "pik" : policy_flag;
      args.checkpoint_path = ckpt_path;
      args.dob_checkpoint = eval_dob_ckpt;
      if (!is_baseline && !eval_repr.empty())
        args.expected_repr = reachlab::representation_from_string(eval_repr);
      args.mode = reachlab::delay_mode_from_string(is_baseline ? base_mode : eval_mode);
      args.set =
          reachlab::randomization_set_from_string(is_baseline ? base_set : eval_set);
      args.step_onset = is_baseline ? base_onset : step_onset;
      args.label = is_baseline ? base_label : label;
      const auto out = reachlab::cmd_evaluate(cfg, args);
      std::cout << out.label << ": reward " << out.aggregate.reward_mean << ", npd "
                << out.aggregate.npd_mean << " m, rrt " << out.aggregate.rrt_mean
                << " s, ss " << out.aggregate.ss_mean << "%\n"
                << "records: " << out.records_path << std::endl;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
