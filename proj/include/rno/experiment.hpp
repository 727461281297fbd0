// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rno/evaluation.hpp"
#include "rno/operators.hpp"
#include "rno/pde.hpp"
#include "rno/training.hpp"

namespace rno {

struct DatasetConfig {
  int train_samples = 100;
  int test_samples = 20;
  int store_stride = 20;
  double train_horizon = 2.0;
  double test_horizon = 10.0;
  GpConfig gp;
};

struct EvalConfig {
  std::vector<int> checkpoints = {5, 50};
};

enum class AblationAxis { None, ObservationWindow, Timestep, DataSize };

std::string to_string(AblationAxis a);
AblationAxis ablation_axis_from_string(const std::string& s);

struct AblationConfig {
  AblationAxis axis = AblationAxis::None;
  std::vector<double> values;
  std::vector<Strategy> strategies = {Strategy::Recurrent};
};

/// One experiment, loadable from a declarative JSON file. Every derived
/// seed (dataset, init, training, per sample) is a pure function of the
/// master seed and a role tag.
struct ExperimentConfig {
  PdeProblem problem = PdeProblem::defaults(PdeKind::AllenCahn, 32);
  DatasetConfig dataset;
  OperatorSpec op;
  TrainConfig train;
  EvalConfig eval;
  AblationConfig ablation;
  std::string out_dir = "runs/out";
  std::uint64_t seed = 0;

  void validate() const;
  /// Operator spec with channel counts resolved against the problem.
  OperatorSpec resolved_spec() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

/// Loads a config file and applies dotted-path overrides ("train.epochs=5").
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
nlohmann::json apply_override(nlohmann::json j, const std::string& assignment);

// ---- run artifacts -----------------------------------------------------------

/// Run index: every emitted file with size and content hash (fnv1a64).
class Manifest {
 public:
  explicit Manifest(std::filesystem::path root) : root_(std::move(root)) {}
  void add(const std::filesystem::path& file);
  void write() const;  // <root>/manifest.json

 private:
  std::filesystem::path root_;
  std::vector<nlohmann::json> entries_;
};

std::string file_hash_hex(const std::filesystem::path& file);

struct GenerateOutput {
  std::filesystem::path train_data;  // sidecar paths
  std::filesystem::path test_data;
};

struct TrainOutput {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  TrainResult result;
};

struct EvaluateOutput {
  std::filesystem::path report_json;
  std::filesystem::path report_csv;
  RolloutSuiteResult suite;
};

/// Writes train/test dataset containers under <out>/data; byte-identical
/// for identical (config, seed).
GenerateOutput run_generate(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Trains per cfg.train, writes the parameter checkpoint and a JSON-lines
/// log (one record per epoch).
TrainOutput run_train(const ExperimentConfig& cfg, const std::filesystem::path& out,
                      const std::filesystem::path& train_data);

/// Rollout evaluation against a test dataset: error table CSV, per-step
/// curves, growth-fit JSON and an SVG error plot.
EvaluateOutput run_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out,
                            const std::filesystem::path& checkpoint,
                            const std::filesystem::path& test_data);

/// generate -> train -> evaluate with one master seed.
EvaluateOutput run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Autoregressive prediction from one test sample, written as a trajectory
/// container plus per-step error CSV.
void run_rollout(const ExperimentConfig& cfg, const std::filesystem::path& out,
                 const std::filesystem::path& checkpoint,
                 const std::filesystem::path& test_data, int sample, int n_steps);

struct AblationPoint {
  Strategy strategy;
  double value;
  std::map<int, double> checkpoint_errors;
  double max_error = 0.0;
  int blowups = 0;
  bool failed = false;
  std::string error;
};

struct AblationOutput {
  std::vector<AblationPoint> points;
  std::map<std::string, std::vector<double>> orders;  // per strategy (data-size axis)
  std::filesystem::path report_json;
};

/// Sweeps the configured ablation axis, re-deriving seeds per point;
/// failures are recorded per point and the sweep continues.
AblationOutput run_ablate(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Aggregates evaluation reports (e.g. across seeds) into mean/std tables.
void run_report(const std::vector<std::filesystem::path>& report_jsons,
                const std::filesystem::path& out);

// ---- plotting -----------------------------------------------------------------

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Self-contained SVG line chart (no external tooling).
void svg_line_chart(const std::filesystem::path& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<SvgSeries>& series, bool log_y = false);

}  // namespace rno
