// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver: data generation, training, evaluation, rollouts,
// ablation sweeps and report aggregation from declarative JSON configs.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure
// (blow-up / divergence), 4 I/O error.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rno/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* c = cmd->add_option("--config", args.config, "experiment config (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", args.out, "output directory (defaults to the config's out_dir)");
  cmd->add_option("--seed", args.seed, "master seed override");
  cmd->add_option("--override", args.overrides, "config override KEY=VALUE (repeatable)");
}

rno::ExperimentConfig load(const CommonArgs& args) {
  rno::ExperimentConfig cfg = rno::load_config(args.config, args.overrides);
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out.empty()) cfg.out_dir = args.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural-operator lab: spectral PDE data, teacher-forced and recurrent "
               "operator training, rollout evaluation"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, roll_args, ablate_args;
  std::string train_data, test_data, checkpoint;
  int sample = 0, n_steps = 50;
  std::vector<std::string> report_inputs;
  std::string report_out;

  CLI::App* gen = app.add_subcommand("generate", "write train/test reference datasets");
  add_common(gen, gen_args);

  CLI::App* tr = app.add_subcommand("train", "train an operator on a dataset");
  add_common(tr, train_args);
  tr->add_option("--data", train_data, "training dataset sidecar (.json)");

  CLI::App* ev = app.add_subcommand("evaluate", "rollout evaluation against a test dataset");
  add_common(ev, eval_args);
  ev->add_option("--checkpoint", checkpoint, "operator checkpoint")->required();
  ev->add_option("--data", test_data, "test dataset sidecar (.json)");

  CLI::App* ro = app.add_subcommand("rollout", "autoregressive prediction from one sample");
  add_common(ro, roll_args);
  ro->add_option("--checkpoint", checkpoint, "operator checkpoint")->required();
  ro->add_option("--data", test_data, "test dataset sidecar (.json)");
  ro->add_option("--sample", sample, "sample index");
  ro->add_option("--steps", n_steps, "number of rollout steps");

  CLI::App* ab = app.add_subcommand("ablate", "run the configured ablation sweep");
  add_common(ab, ablate_args);

  CLI::App* re = app.add_subcommand("report", "aggregate evaluation reports (mean/std)");
  re->add_option("--out", report_out, "output directory")->required();
  re->add_option("inputs", report_inputs, "report.json files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      rno::ExperimentConfig cfg = load(gen_args);
      rno::run_generate(cfg, cfg.out_dir);
    } else if (tr->parsed()) {
      rno::ExperimentConfig cfg = load(train_args);
      std::string data = train_data.empty() ? cfg.out_dir + "/data/train.json" : train_data;
      rno::run_train(cfg, cfg.out_dir, data);
    } else if (ev->parsed()) {
      rno::ExperimentConfig cfg = load(eval_args);
      std::string data = test_data.empty() ? cfg.out_dir + "/data/test.json" : test_data;
      rno::run_evaluate(cfg, cfg.out_dir + "/eval", checkpoint, data);
    } else if (ro->parsed()) {
      rno::ExperimentConfig cfg = load(roll_args);
      std::string data = test_data.empty() ? cfg.out_dir + "/data/test.json" : test_data;
      rno::run_rollout(cfg, cfg.out_dir + "/rollout", checkpoint, data, sample, n_steps);
    } else if (ab->parsed()) {
      rno::ExperimentConfig cfg = load(ablate_args);
      rno::run_ablate(cfg, cfg.out_dir + "/ablation");
    } else if (re->parsed()) {
      std::vector<std::filesystem::path> inputs(report_inputs.begin(), report_inputs.end());
      rno::run_report(inputs, report_out);
    }
  } catch (const rno::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const rno::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const rno::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
