// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rno/experiment.hpp"
#include "rno/rng.hpp"

using namespace rno;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.problem = PdeProblem::defaults(PdeKind::AllenCahn, 16);
  cfg.dataset.train_samples = 3;
  cfg.dataset.test_samples = 2;
  cfg.dataset.store_stride = 20;
  cfg.dataset.train_horizon = 0.6;
  cfg.dataset.test_horizon = 1.0;
  cfg.op.variant = OperatorVariant::Mgno;
  cfg.op.layers = 1;
  cfg.op.width = 3;
  cfg.op.levels = 2;
  cfg.op.pattern = {{1, 0}, {1, 0}};
  cfg.train.strategy = Strategy::Recurrent;
  cfg.train.dt = 0.2;
  cfg.train.window = 2;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 2;
  cfg.train.clip_norm = 1.0;
  cfg.eval.checkpoints = {2, 5};
  cfg.seed = 12345;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "rnolab_exp" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config: JSON round trip is stable") {
  ExperimentConfig cfg = tiny_config();
  json j1 = cfg;
  ExperimentConfig back = j1.get<ExperimentConfig>();
  json j2 = back;
  CHECK(j1 == j2);
}

TEST_CASE("config: overrides follow dotted paths and parse JSON values") {
  json j = tiny_config();
  j = apply_override(j, "train.epochs=7");
  j = apply_override(j, "problem.d1=0.5");
  j = apply_override(j, "train.strategy=teacher_forcing");
  CHECK(j["train"]["epochs"] == 7);
  CHECK(j["problem"]["d1"] == 0.5);
  CHECK(j["train"]["strategy"] == "teacher_forcing");
  CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
}

TEST_CASE("config: clipping defaults depend on the strategy") {
  json j = tiny_config();
  j["train"].erase("clip_norm");
  ExperimentConfig rec = j.get<ExperimentConfig>();
  CHECK(rec.train.clip_norm == 1.0);
  j["train"]["strategy"] = "teacher_forcing";
  ExperimentConfig tf = j.get<ExperimentConfig>();
  CHECK(!tf.train.clip_norm.has_value());
  j["train"]["clip_norm"] = nullptr;
  j["train"]["strategy"] = "recurrent";
  ExperimentConfig off = j.get<ExperimentConfig>();
  CHECK(!off.train.clip_norm.has_value());
}

TEST_CASE("seed derivation is pure and role-separated") {
  CHECK(derive_seed(1, "dataset/train") == derive_seed(1, "dataset/train"));
  CHECK(derive_seed(1, "dataset/train") != derive_seed(1, "dataset/test"));
  CHECK(derive_seed(1, "sample", 0) != derive_seed(1, "sample", 1));
  CHECK(derive_seed(1, "sample", 3) != derive_seed(2, "sample", 3));
}

TEST_CASE("run_generate: payload sizes follow the closed form and bytes are reproducible") {
  ExperimentConfig cfg = tiny_config();
  cfg.problem = PdeProblem::defaults(PdeKind::AllenCahn, 32);
  cfg.dataset.train_samples = 4;
  cfg.dataset.train_horizon = 2.0;  // 0.01 fine step, stride 20 -> 11 frames
  fs::path d1 = fresh_dir("gen1"), d2 = fresh_dir("gen2");
  run_generate(cfg, d1);
  run_generate(cfg, d2);
  CHECK(fs::file_size(d1 / "data" / "train.bin") == 4 * 11 * 1 * 32 * 32 * sizeof(double));
  CHECK(read_bytes(d1 / "data" / "train.bin") == read_bytes(d2 / "data" / "train.bin"));
  CHECK(read_bytes(d1 / "data" / "train.json") == read_bytes(d2 / "data" / "train.json"));
  CHECK(fs::exists(d1 / "manifest.json"));

  cfg.problem.kind = PdeKind::Heat;
  cfg.problem.alpha = -0.5;
  try {
    run_generate(cfg, fresh_dir("gen_bad"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("problem.alpha") != std::string::npos);
  }
}

TEST_CASE("run_train: zero epochs reproduce the initialization") {
  ExperimentConfig cfg = tiny_config();
  cfg.train.epochs = 0;
  fs::path dir = fresh_dir("train0");
  GenerateOutput gen = run_generate(cfg, dir);
  TrainOutput out = run_train(cfg, dir, gen.train_data);
  NeuralOperator trained = load_checkpoint(out.checkpoint);
  NeuralOperator init =
      NeuralOperator::init(cfg.resolved_spec(), derive_seed(cfg.seed, "init"));
  REQUIRE(trained.parameters().size() == init.parameters().size());
  for (std::size_t i = 0; i < init.parameters().size(); ++i)
    for (Index k = 0; k < init.parameters()[i].value.size(); ++k)
      CHECK(trained.parameters()[i].value.array()[k] == init.parameters()[i].value.array()[k]);
}

TEST_CASE("pipeline: rerunning with one master seed is byte-identical") {
  ExperimentConfig cfg = tiny_config();
  fs::path d1 = fresh_dir("pipe1"), d2 = fresh_dir("pipe2");
  run_pipeline(cfg, d1);
  run_pipeline(cfg, d2);
  // The training log carries wall-clock timings and the manifests hash it,
  // so the byte-identity contract covers datasets, checkpoints and reports.
  for (const char* rel :
       {"data/train.bin", "data/train.json", "data/test.bin", "data/test.json",
        "checkpoint.rno", "config.effective.json", "eval/report.json", "eval/report.csv",
        "eval/curves.csv", "eval/growth.json", "eval/plots/error_vs_step.svg"}) {
    INFO(rel);
    CHECK(read_bytes(d1 / rel) == read_bytes(d2 / rel));
  }
}

TEST_CASE("run_evaluate: repeated evaluation of one checkpoint is identical") {
  ExperimentConfig cfg = tiny_config();
  fs::path dir = fresh_dir("eval");
  GenerateOutput gen = run_generate(cfg, dir);
  TrainOutput tr = run_train(cfg, dir, gen.train_data);
  EvaluateOutput e1 = run_evaluate(cfg, dir / "eval1", tr.checkpoint, gen.test_data);
  EvaluateOutput e2 = run_evaluate(cfg, dir / "eval2", tr.checkpoint, gen.test_data);
  CHECK(read_bytes(e1.report_json) == read_bytes(e2.report_json));
  CHECK(read_bytes(e1.report_csv) == read_bytes(e2.report_csv));
  // Table-1 layout: one row per requested checkpoint.
  std::string csv = read_bytes(e1.report_csv);
  CHECK(csv.find("\n2,") != std::string::npos);
  CHECK(csv.find("\n5,") != std::string::npos);
}

TEST_CASE("run_train: dataset/problem mismatch is rejected") {
  ExperimentConfig cfg = tiny_config();
  fs::path dir = fresh_dir("mismatch");
  GenerateOutput gen = run_generate(cfg, dir);
  ExperimentConfig other = cfg;
  other.problem.d1 = 0.123;
  CHECK_THROWS_AS(run_train(other, dir, gen.train_data), ConfigError);
}

TEST_CASE("run_report: aggregates checkpoint errors across seeds") {
  ExperimentConfig cfg = tiny_config();
  fs::path dir = fresh_dir("agg");
  std::vector<fs::path> reports;
  for (std::uint64_t seed : {1001, 1002}) {
    ExperimentConfig c = cfg;
    c.seed = seed;
    EvaluateOutput eo = run_pipeline(c, dir / ("seed_" + std::to_string(seed)));
    reports.push_back(eo.report_json);
  }
  run_report(reports, dir / "summary");
  json agg = json::parse(read_bytes(dir / "summary" / "aggregate.json"));
  CHECK(agg["checkpoints"]["2"]["runs"] == 2);
  CHECK(agg["checkpoints"]["5"]["mean"].is_number());
  CHECK(agg["checkpoints"]["5"]["std"].is_number());
}

TEST_CASE("run_ablate: data-size sweep reports orders per strategy") {
  ExperimentConfig cfg = tiny_config();
  cfg.train.epochs = 1;
  cfg.dataset.test_samples = 2;
  cfg.eval.checkpoints = {5};
  cfg.ablation.axis = AblationAxis::DataSize;
  cfg.ablation.values = {2, 3};
  cfg.ablation.strategies = {Strategy::Recurrent, Strategy::TeacherForcing};
  fs::path dir = fresh_dir("ablate_ds");
  AblationOutput out = run_ablate(cfg, dir);
  CHECK(out.points.size() == 4);
  CHECK(out.orders.count("recurrent") == 1);
  CHECK(out.orders.count("teacher_forcing") == 1);
  CHECK(out.orders["recurrent"].size() == 1);
  CHECK(fs::exists(dir / "ablation.csv"));
  CHECK(fs::exists(dir / "ablation.svg"));
}

TEST_CASE("run_ablate: single-point sweeps degrade gracefully") {
  ExperimentConfig cfg = tiny_config();
  cfg.train.epochs = 1;
  cfg.ablation.axis = AblationAxis::DataSize;
  cfg.ablation.values = {2};
  cfg.ablation.strategies = {Strategy::Recurrent};
  fs::path dir = fresh_dir("ablate_single");
  AblationOutput out = run_ablate(cfg, dir);
  CHECK(out.points.size() == 1);
  CHECK(out.orders.empty());
  json j = json::parse(read_bytes(out.report_json));
  bool warned = false;
  for (const auto& n : j["notes"])
    if (n.get<std::string>().find("single-point") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("run_ablate: per-point failures are recorded and the sweep continues") {
  ExperimentConfig cfg = tiny_config();
  cfg.train.epochs = 1;
  cfg.ablation.axis = AblationAxis::Timestep;
  cfg.ablation.values = {0.015, 0.2};  // 0.015 is not a multiple of fine_dt
  cfg.ablation.strategies = {Strategy::Recurrent};
  fs::path dir = fresh_dir("ablate_fail");
  AblationOutput out = run_ablate(cfg, dir);
  REQUIRE(out.points.size() == 2);
  CHECK(out.points[0].failed);
  CHECK(!out.points[1].failed);
}

#ifdef RNO_CLI_PATH
TEST_CASE("cli: subcommands cover the pipeline and exit codes") {
  fs::path dir = fresh_dir("cli");
  ExperimentConfig cfg = tiny_config();
  cfg.out_dir = (dir / "run").string();
  json j = cfg;
  {
    std::ofstream out(dir / "cfg.json");
    out << j.dump(2);
  }
  auto shell = [&](const std::string& args) {
    std::string cmd = std::string(RNO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  std::string cfg_arg = "--config " + (dir / "cfg.json").string();
  CHECK(shell("generate " + cfg_arg) == 0);
  CHECK(shell("train " + cfg_arg) == 0);
  CHECK(shell("evaluate " + cfg_arg + " --checkpoint " + (dir / "run/checkpoint.rno").string()) ==
        0);
  CHECK(shell("rollout " + cfg_arg + " --checkpoint " + (dir / "run/checkpoint.rno").string() +
              " --sample 0 --steps 4") == 0);
  CHECK(fs::exists(dir / "run/eval/report.csv"));
  CHECK(fs::exists(dir / "run/rollout/prediction.bin"));

  // Config errors exit with 2.
  CHECK(shell("generate " + cfg_arg + " --override problem.d1=-1") == 2);
  // I/O errors exit with 4.
  CHECK(shell("train " + cfg_arg + " --data " + (dir / "missing.json").string()) == 4);
}
#endif
