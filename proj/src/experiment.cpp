// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rno/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rno/rng.hpp"

namespace rno {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- config serialization -----------------------------------------------------

std::string to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::None: return "none";
    case AblationAxis::ObservationWindow: return "observation-window";
    case AblationAxis::Timestep: return "timestep";
    case AblationAxis::DataSize: return "data-size";
  }
  return "?";
}

AblationAxis ablation_axis_from_string(const std::string& s) {
  if (s == "none") return AblationAxis::None;
  if (s == "observation-window") return AblationAxis::ObservationWindow;
  if (s == "timestep") return AblationAxis::Timestep;
  if (s == "data-size") return AblationAxis::DataSize;
  throw ConfigError("ablation.axis: unknown axis '" + s + "'");
}

void ExperimentConfig::validate() const {
  problem.validate();
  train.validate();
  resolved_spec().validate();
  if (dataset.train_samples < 0 || dataset.test_samples < 0)
    throw ConfigError("dataset.*_samples must be >= 0");
  if (dataset.store_stride < 1) throw ConfigError("dataset.store_stride must be >= 1");
  if (dataset.train_horizon <= 0 || dataset.test_horizon <= 0)
    throw ConfigError("dataset.*_horizon must be > 0");
  for (int c : eval.checkpoints)
    if (c < 1) throw ConfigError("eval.checkpoints entries must be >= 1");
  if (ablation.axis != AblationAxis::None && ablation.values.empty())
    throw ConfigError("ablation.values must be non-empty when an axis is set");
}

OperatorSpec ExperimentConfig::resolved_spec() const {
  OperatorSpec spec = op;
  spec.in_channels = problem.has_forcing() ? 2 : 1;
  spec.out_channels = 1;
  return spec;
}

namespace {

json spec_json(const OperatorSpec& spec) {
  json j{{"variant", to_string(spec.variant)},
         {"layers", spec.layers},
         {"width", spec.width},
         {"activation", to_string(spec.activation)}};
  if (spec.variant == OperatorVariant::Fno) {
    j["modes"] = spec.modes;
  } else {
    j["levels"] = spec.levels;
    j["kernel_size"] = spec.kernel_size;
    j["pattern"] = spec.effective_pattern();
  }
  return j;
}

OperatorSpec spec_from(const json& j) {
  OperatorSpec spec;
  spec.variant = variant_from_string(j.value("variant", std::string("mgno")));
  spec.layers = j.value("layers", 4);
  spec.width = j.value("width", 32);
  spec.activation = activation_from_string(j.value("activation", std::string("gelu")));
  if (spec.variant == OperatorVariant::Fno) {
    spec.modes = j.value("modes", 16);
  } else {
    spec.levels = j.value("levels", 5);
    spec.kernel_size = j.value("kernel_size", 3);
    if (j.contains("pattern"))
      spec.pattern = j["pattern"].get<std::vector<std::array<int, 2>>>();
  }
  return spec;
}

}  // namespace

void to_json(json& j, const ExperimentConfig& cfg) {
  j = json{
      {"problem", cfg.problem},
      {"dataset",
       {{"train_samples", cfg.dataset.train_samples},
        {"test_samples", cfg.dataset.test_samples},
        {"store_stride", cfg.dataset.store_stride},
        {"train_horizon", cfg.dataset.train_horizon},
        {"test_horizon", cfg.dataset.test_horizon},
        {"gp", {{"length_scale", cfg.dataset.gp.length_scale}, {"jitter", cfg.dataset.gp.jitter}}}}},
      {"operator", spec_json(cfg.op)},
      {"train",
       {{"strategy", to_string(cfg.train.strategy)},
        {"dt", cfg.train.dt},
        {"window", cfg.train.window},
        {"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"peak_lr", cfg.train.peak_lr},
        {"weight_decay", cfg.train.weight_decay},
        {"threads", cfg.train.threads}}},
      {"eval", {{"checkpoints", cfg.eval.checkpoints}}},
      {"out_dir", cfg.out_dir},
      {"seed", cfg.seed}};
  j["train"]["clip_norm"] = cfg.train.clip_norm ? json(*cfg.train.clip_norm) : json(nullptr);
  json ab{{"axis", to_string(cfg.ablation.axis)}, {"values", cfg.ablation.values}};
  json strategies = json::array();
  for (Strategy s : cfg.ablation.strategies) strategies.push_back(to_string(s));
  ab["strategies"] = strategies;
  j["ablation"] = ab;
}

void from_json(const json& j, ExperimentConfig& cfg) {
  cfg = ExperimentConfig{};
  if (j.contains("problem")) cfg.problem = j["problem"].get<PdeProblem>();
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    cfg.dataset.train_samples = d.value("train_samples", cfg.dataset.train_samples);
    cfg.dataset.test_samples = d.value("test_samples", cfg.dataset.test_samples);
    cfg.dataset.store_stride = d.value("store_stride", cfg.dataset.store_stride);
    cfg.dataset.train_horizon = d.value("train_horizon", cfg.dataset.train_horizon);
    cfg.dataset.test_horizon = d.value("test_horizon", cfg.dataset.test_horizon);
    if (d.contains("gp")) {
      cfg.dataset.gp.length_scale = d["gp"].value("length_scale", cfg.dataset.gp.length_scale);
      cfg.dataset.gp.jitter = d["gp"].value("jitter", cfg.dataset.gp.jitter);
    }
  }
  if (j.contains("operator")) cfg.op = spec_from(j["operator"]);
  if (j.contains("train")) {
    const json& t = j["train"];
    cfg.train.strategy = strategy_from_string(t.value("strategy", std::string("recurrent")));
    cfg.train.dt = t.value("dt", cfg.train.dt);
    cfg.train.window = t.value("window", cfg.train.window);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.peak_lr = t.value("peak_lr", cfg.train.peak_lr);
    cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
    cfg.train.threads = t.value("threads", cfg.train.threads);
    if (!t.contains("clip_norm")) {
      // Library default: clipping on for recurrent training only.
      if (cfg.train.strategy == Strategy::Recurrent) cfg.train.clip_norm = 1.0;
    } else if (!t["clip_norm"].is_null()) {
      cfg.train.clip_norm = t["clip_norm"].get<double>();
    }
  }
  if (j.contains("eval") && j["eval"].contains("checkpoints"))
    cfg.eval.checkpoints = j["eval"]["checkpoints"].get<std::vector<int>>();
  if (j.contains("ablation")) {
    const json& a = j["ablation"];
    cfg.ablation.axis = ablation_axis_from_string(a.value("axis", std::string("none")));
    if (a.contains("values")) cfg.ablation.values = a["values"].get<std::vector<double>>();
    if (a.contains("strategies")) {
      cfg.ablation.strategies.clear();
      for (const json& s : a["strategies"])
        cfg.ablation.strategies.push_back(strategy_from_string(s.get<std::string>()));
    }
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.seed = j.value("seed", std::uint64_t{0});
}

json apply_override(json j, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not KEY=VALUE");
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) parsed = value;  // plain string
  json* node = &j;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = key.find('.', pos);
    std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key part");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      break;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
  return j;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("config: invalid JSON in " + path.string());
  for (const std::string& o : overrides) j = apply_override(std::move(j), o);
  ExperimentConfig cfg = j.get<ExperimentConfig>();
  cfg.validate();
  return cfg;
}

// ---- manifest -------------------------------------------------------------------

std::string file_hash_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("manifest: cannot open " + file.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void Manifest::add(const fs::path& file) {
  entries_.push_back(json{{"path", fs::relative(file, root_).generic_string()},
                          {"bytes", static_cast<std::int64_t>(fs::file_size(file))},
                          {"fnv1a64", file_hash_hex(file)}});
}

void Manifest::write() const {
  json j{{"kind", "rnolab-manifest"}, {"files", entries_}};
  std::ofstream out(root_ / "manifest.json");
  if (!out) throw IoError("manifest: cannot write in " + root_.string());
  out << j.dump(2) << "\n";
}

// ---- shared helpers --------------------------------------------------------------

namespace {

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_effective_config(const ExperimentConfig& cfg, const fs::path& out, Manifest& mf) {
  json j = cfg;
  fs::path p = out / "config.effective.json";
  write_text(p, j.dump(2) + "\n");
  mf.add(p);
}

TrajectoryDataset load_and_check_dataset(const ExperimentConfig& cfg, const fs::path& path) {
  TrajectoryDataset ds = load_dataset(path);
  json a = ds.problem, b = cfg.problem;
  if (a != b)
    throw ConfigError("dataset " + path.string() + " does not match the configured problem");
  return ds;
}

json suite_to_json(const RolloutSuiteResult& suite) {
  json cps = json::object();
  for (const auto& [step, err] : suite.checkpoints) cps[std::to_string(step)] = err;
  json j{{"checkpoints", cps},
         {"per_step_mean", suite.per_step_mean},
         {"per_step_count", suite.per_step_count},
         {"blowup_count", suite.blowup_count},
         {"blowup_steps", suite.blowup_steps}};
  return j;
}

json growth_to_json(const GrowthFit& fit) {
  return json{{"linear", {{"intercept", fit.linear_intercept},
                          {"slope", fit.linear_slope},
                          {"rss", fit.linear_rss}}},
              {"exponential", {{"log_amplitude", fit.exp_log_amplitude},
                               {"rate", fit.exp_rate},
                               {"rss", fit.exp_rss}}},
              {"mean_error", fit.mean_error},
              {"selected", fit.selected == GrowthFit::Model::Exponential ? "exponential"
                                                                         : "linear"},
              {"growth_rate", fit.growth_rate()}};
}

}  // namespace

// ---- run: generate -----------------------------------------------------------------

GenerateOutput run_generate(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  fs::create_directories(out / "data");
  Manifest mf(out);
  write_effective_config(cfg, out, mf);

  GenerateOutput go;
  TrajectoryDataset train_ds =
      generate_dataset(cfg.problem, cfg.dataset.train_samples, cfg.dataset.train_horizon,
                       cfg.dataset.store_stride, derive_seed(cfg.seed, "dataset/train"),
                       cfg.dataset.gp, cfg.train.threads);
  save_dataset(out / "data" / "train", train_ds);
  go.train_data = out / "data" / "train.json";
  TrajectoryDataset test_ds =
      generate_dataset(cfg.problem, cfg.dataset.test_samples, cfg.dataset.test_horizon,
                       cfg.dataset.store_stride, derive_seed(cfg.seed, "dataset/test"),
                       cfg.dataset.gp, cfg.train.threads);
  save_dataset(out / "data" / "test", test_ds);
  go.test_data = out / "data" / "test.json";

  for (const char* name : {"train.json", "train.bin", "test.json", "test.bin"})
    mf.add(out / "data" / name);
  mf.write();
  return go;
}

// ---- run: train ----------------------------------------------------------------------

TrainOutput run_train(const ExperimentConfig& cfg, const fs::path& out,
                      const fs::path& train_data) {
  cfg.validate();
  fs::create_directories(out);
  Manifest mf(out);
  write_effective_config(cfg, out, mf);

  TrajectoryDataset ds = load_and_check_dataset(cfg, train_data);
  NeuralOperator op = NeuralOperator::init(cfg.resolved_spec(), derive_seed(cfg.seed, "init"));
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, "train");
  TrainOutput to;
  to.result = train(op, ds, tc);

  to.checkpoint = out / "checkpoint.rno";
  save_checkpoint(to.checkpoint, op);
  mf.add(to.checkpoint);

  std::ostringstream log;
  for (const EpochRecord& r : to.result.history) {
    json line{{"epoch", r.epoch},       {"lr", r.lr},
              {"train_loss", r.train_loss}, {"wall_ms", r.wall_ms},
              {"grad_norm", r.grad_norm},   {"grad_warning", r.grad_warning}};
    log << line.dump() << "\n";
  }
  to.log = out / "train_log.jsonl";
  write_text(to.log, log.str());
  mf.add(to.log);
  mf.write();
  return to;
}

// ---- run: evaluate ---------------------------------------------------------------------

EvaluateOutput run_evaluate(const ExperimentConfig& cfg, const fs::path& out,
                            const fs::path& checkpoint, const fs::path& test_data) {
  cfg.validate();
  fs::create_directories(out);
  Manifest mf(out);
  write_effective_config(cfg, out, mf);

  NeuralOperator op = load_checkpoint(checkpoint);
  TrajectoryDataset ds = load_and_check_dataset(cfg, test_data);
  op.spec().check_grid(ds.height, ds.width);
  int expect_ch = ds.forcing_ptr() ? 2 : 1;
  if (op.spec().in_channels != expect_ch)
    throw ConfigError("checkpoint input channels do not match the dataset");

  EvaluateOutput eo;
  eo.suite = evaluate_rollout_suite(op, ds, cfg.train.dt, cfg.eval.checkpoints,
                                    cfg.train.threads);

  // Error table.
  std::ostringstream csv;
  csv << "checkpoint,mean_relative_l2,contributing_samples,blowups\n";
  for (const auto& [step, err] : eo.suite.checkpoints) {
    Index cnt = step <= static_cast<int>(eo.suite.per_step_count.size())
                    ? eo.suite.per_step_count[static_cast<std::size_t>(step - 1)]
                    : 0;
    csv << step << "," << fmt(err) << "," << cnt << "," << eo.suite.blowup_count << "\n";
  }
  eo.report_csv = out / "report.csv";
  write_text(eo.report_csv, csv.str());
  mf.add(eo.report_csv);

  std::ostringstream curve;
  curve << "step,mean_relative_l2,count\n";
  for (std::size_t k = 0; k < eo.suite.per_step_mean.size(); ++k)
    curve << (k + 1) << "," << fmt(eo.suite.per_step_mean[k]) << ","
          << eo.suite.per_step_count[k] << "\n";
  fs::path curves_csv = out / "curves.csv";
  write_text(curves_csv, curve.str());
  mf.add(curves_csv);

  json report{{"strategy", to_string(cfg.train.strategy)},
              {"operator", to_string(op.spec().variant)},
              {"seed", cfg.seed},
              {"dt", cfg.train.dt},
              {"suite", suite_to_json(eo.suite)}};

  // Growth diagnostics need a usable curve of at least four finite steps.
  std::vector<double> curve_vals;
  for (double e : eo.suite.per_step_mean) {
    if (!std::isfinite(e) || e <= 0.0) break;
    curve_vals.push_back(e);
  }
  if (curve_vals.size() >= 4) {
    GrowthFit fit = fit_growth(curve_vals);
    report["growth_fit"] = growth_to_json(fit);
    fs::path growth = out / "growth.json";
    write_text(growth, growth_to_json(fit).dump(2) + "\n");
    mf.add(growth);
  } else {
    report["growth_fit"] = nullptr;
  }

  eo.report_json = out / "report.json";
  write_text(eo.report_json, report.dump(2) + "\n");
  mf.add(eo.report_json);

  SvgSeries series{"mean relative L2", {}};
  for (std::size_t k = 0; k < eo.suite.per_step_mean.size(); ++k)
    if (std::isfinite(eo.suite.per_step_mean[k]))
      series.points.emplace_back(static_cast<double>(k + 1), eo.suite.per_step_mean[k]);
  fs::path svg = out / "plots" / "error_vs_step.svg";
  svg_line_chart(svg, "rollout error", "step", "mean relative L2", {series}, /*log_y=*/true);
  mf.add(svg);
  mf.write();
  return eo;
}

EvaluateOutput run_pipeline(const ExperimentConfig& cfg, const fs::path& out) {
  GenerateOutput gen = run_generate(cfg, out);
  TrainOutput tr = run_train(cfg, out, gen.train_data);
  return run_evaluate(cfg, out / "eval", tr.checkpoint, gen.test_data);
}

// ---- run: rollout ----------------------------------------------------------------------

void run_rollout(const ExperimentConfig& cfg, const fs::path& out, const fs::path& checkpoint,
                 const fs::path& test_data, int sample, int n_steps) {
  cfg.validate();
  fs::create_directories(out);
  Manifest mf(out);
  write_effective_config(cfg, out, mf);

  NeuralOperator op = load_checkpoint(checkpoint);
  TrajectoryDataset ds = load_and_check_dataset(cfg, test_data);
  if (sample < 0 || sample >= ds.samples) throw ConfigError("rollout: sample index out of range");

  std::vector<Tensor> truth;
  for (Index t = 0; t < ds.frames; ++t) truth.push_back(ds.frame(sample, t));
  RolloutResult r = rollout(op, truth[0], ds.forcing_ptr(), cfg.train.dt, n_steps, truth);

  std::ostringstream csv;
  csv << "step,relative_l2\n";
  for (std::size_t k = 0; k < r.errors.size(); ++k)
    csv << (k + 1) << "," << fmt(r.errors[k]) << "\n";
  fs::path err_csv = out / "rollout_errors.csv";
  write_text(err_csv, csv.str());
  mf.add(err_csv);

  // Predicted trajectory as a dataset container (one sample).
  TrajectoryDataset pred;
  pred.problem = ds.problem;
  pred.dt = cfg.train.dt;
  pred.store_stride = ds.store_stride;
  pred.samples = 1;
  pred.frames = static_cast<Index>(r.trajectory.size());
  pred.channels = ds.channels;
  pred.height = ds.height;
  pred.width = ds.width;
  pred.seed = cfg.seed;
  pred.gp = ds.gp;
  pred.sample_seeds = {ds.sample_seeds.at(static_cast<std::size_t>(sample))};
  pred.data = Array(pred.frames * pred.channels * pred.height * pred.width);
  for (Index t = 0; t < pred.frames; ++t)
    pred.data.segment(pred.frame_offset(0, t), pred.channels * pred.height * pred.width) =
        r.trajectory[static_cast<std::size_t>(t)].array();
  save_dataset(out / "prediction", pred);
  mf.add(out / "prediction.json");
  mf.add(out / "prediction.bin");

  json meta{{"sample", sample},
            {"n_steps", n_steps},
            {"blowup_step", r.blowup_step ? json(*r.blowup_step) : json(nullptr)}};
  write_text(out / "rollout.json", meta.dump(2) + "\n");
  mf.add(out / "rollout.json");
  mf.write();
}

// ---- run: ablate -----------------------------------------------------------------------

namespace {

ExperimentConfig point_config(const ExperimentConfig& base, AblationAxis axis, Strategy strategy,
                              double value) {
  ExperimentConfig cfg = base;
  cfg.ablation.axis = AblationAxis::None;
  cfg.ablation.values.clear();
  cfg.train.strategy = strategy;
  switch (axis) {
    case AblationAxis::DataSize:
      cfg.dataset.train_samples = static_cast<int>(std::llround(value));
      break;
    case AblationAxis::ObservationWindow:
      cfg.train.window = static_cast<int>(std::llround(value));
      cfg.dataset.train_horizon = cfg.train.dt * static_cast<double>(cfg.train.window);
      break;
    case AblationAxis::Timestep: {
      cfg.train.dt = value;
      double steps = value / cfg.problem.fine_dt;
      int stride = static_cast<int>(std::llround(steps));
      if (std::abs(steps - static_cast<double>(stride)) > 1e-9 || stride < 1)
        throw ConfigError("ablation: timestep must be a multiple of problem.fine_dt");
      cfg.dataset.store_stride = stride;
      cfg.train.window =
          static_cast<int>(std::llround(cfg.dataset.train_horizon / cfg.train.dt));
      cfg.eval.checkpoints = {
          static_cast<int>(std::llround(cfg.dataset.test_horizon / cfg.train.dt))};
      break;
    }
    case AblationAxis::None: break;
  }
  std::string role = "ablate/" + to_string(axis) + "/" + to_string(strategy) + "/" +
                     fmt(value, "%g");
  cfg.seed = derive_seed(base.seed, role);
  return cfg;
}

}  // namespace

AblationOutput run_ablate(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  if (cfg.ablation.axis == AblationAxis::None)
    throw ConfigError("ablation.axis must be set for the ablate command");
  fs::create_directories(out);
  Manifest mf(out);
  write_effective_config(cfg, out, mf);

  AblationOutput ao;
  std::vector<std::string> notes;
  for (Strategy strategy : cfg.ablation.strategies) {
    for (double value : cfg.ablation.values) {
      AblationPoint pt;
      pt.strategy = strategy;
      pt.value = value;
      fs::path pdir = out / (to_string(cfg.ablation.axis) + "_" + to_string(strategy) + "_" +
                             fmt(value, "%g"));
      try {
        ExperimentConfig pc = point_config(cfg, cfg.ablation.axis, strategy, value);
        EvaluateOutput eo = run_pipeline(pc, pdir);
        pt.checkpoint_errors = eo.suite.checkpoints;
        pt.blowups = eo.suite.blowup_count;
        for (double e : eo.suite.per_step_mean)
          if (std::isfinite(e)) pt.max_error = std::max(pt.max_error, e);
      } catch (const std::exception& e) {
        pt.failed = true;
        pt.error = e.what();
        notes.push_back("point " + to_string(strategy) + "/" + fmt(value, "%g") +
                        " failed: " + pt.error);
      }
      ao.points.push_back(std::move(pt));
    }
  }

  // Data-size orders per strategy over the last configured checkpoint.
  if (cfg.ablation.axis == AblationAxis::DataSize) {
    if (cfg.ablation.values.size() < 2) {
      notes.push_back("single-point sweep: no convergence orders");
    } else {
      int cp = cfg.eval.checkpoints.empty() ? 0 : cfg.eval.checkpoints.back();
      for (Strategy strategy : cfg.ablation.strategies) {
        std::vector<double> errs, sizes;
        bool usable = true;
        for (const AblationPoint& pt : ao.points) {
          if (pt.strategy != strategy) continue;
          auto it = pt.checkpoint_errors.find(cp);
          if (pt.failed || it == pt.checkpoint_errors.end() || !std::isfinite(it->second) ||
              it->second <= 0) {
            usable = false;
            break;
          }
          errs.push_back(it->second);
          sizes.push_back(pt.value);
        }
        if (usable && errs.size() >= 2)
          ao.orders[to_string(strategy)] = convergence_order(errs, sizes);
        else
          notes.push_back("orders unavailable for " + to_string(strategy));
      }
    }
  }

  // Combined report.
  std::ostringstream csv;
  csv << "axis,strategy,value,checkpoint,error,max_error,blowups,failed\n";
  for (const AblationPoint& pt : ao.points) {
    if (pt.checkpoint_errors.empty())
      csv << to_string(cfg.ablation.axis) << "," << to_string(pt.strategy) << ","
          << fmt(pt.value, "%g") << ",,," << fmt(pt.max_error) << "," << pt.blowups << ","
          << (pt.failed ? 1 : 0) << "\n";
    for (const auto& [step, err] : pt.checkpoint_errors)
      csv << to_string(cfg.ablation.axis) << "," << to_string(pt.strategy) << ","
          << fmt(pt.value, "%g") << "," << step << "," << fmt(err) << "," << fmt(pt.max_error)
          << "," << pt.blowups << "," << (pt.failed ? 1 : 0) << "\n";
  }
  write_text(out / "ablation.csv", csv.str());
  mf.add(out / "ablation.csv");

  json points = json::array();
  for (const AblationPoint& pt : ao.points) {
    json cps = json::object();
    for (const auto& [step, err] : pt.checkpoint_errors) cps[std::to_string(step)] = err;
    points.push_back(json{{"strategy", to_string(pt.strategy)},
                          {"value", pt.value},
                          {"checkpoint_errors", cps},
                          {"max_error", pt.max_error},
                          {"blowups", pt.blowups},
                          {"failed", pt.failed},
                          {"error", pt.error}});
  }
  json jr{{"axis", to_string(cfg.ablation.axis)},
          {"points", points},
          {"orders", ao.orders},
          {"notes", notes}};
  ao.report_json = out / "ablation.json";
  write_text(ao.report_json, jr.dump(2) + "\n");
  mf.add(ao.report_json);

  // One curve per strategy: error at the last checkpoint (or max error for
  // the timestep axis) against the swept value.
  std::vector<SvgSeries> series;
  for (Strategy strategy : cfg.ablation.strategies) {
    SvgSeries s{to_string(strategy), {}};
    for (const AblationPoint& pt : ao.points) {
      if (pt.strategy != strategy || pt.failed) continue;
      double y = pt.max_error;
      if (cfg.ablation.axis != AblationAxis::Timestep && !pt.checkpoint_errors.empty())
        y = pt.checkpoint_errors.rbegin()->second;
      if (std::isfinite(y)) s.points.emplace_back(pt.value, y);
    }
    series.push_back(std::move(s));
  }
  svg_line_chart(out / "ablation.svg", "ablation: " + to_string(cfg.ablation.axis),
                 to_string(cfg.ablation.axis), "error", series, /*log_y=*/true);
  mf.add(out / "ablation.svg");
  mf.write();
  return ao;
}

// ---- run: report (multi-seed aggregation) --------------------------------------------

void run_report(const std::vector<fs::path>& report_jsons, const fs::path& out) {
  if (report_jsons.empty()) throw ConfigError("report: no input reports");
  fs::create_directories(out);
  Manifest mf(out);

  std::map<std::string, std::vector<double>> by_checkpoint;
  json inputs = json::array();
  for (const fs::path& p : report_jsons) {
    std::ifstream in(p);
    if (!in) throw IoError("report: cannot open " + p.string());
    json j = json::parse(in);
    inputs.push_back(j);
    for (const auto& [step, err] : j.at("suite").at("checkpoints").items())
      if (err.is_number()) by_checkpoint[step].push_back(err.get<double>());
  }

  std::ostringstream csv;
  csv << "checkpoint,mean,std,runs\n";
  json agg = json::object();
  for (const auto& [step, vals] : by_checkpoint) {
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0;
    for (double v : vals) var += (v - mean) * (v - mean);
    double sd = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
    csv << step << "," << fmt(mean) << "," << fmt(sd) << "," << vals.size() << "\n";
    agg[step] = json{{"mean", mean}, {"std", sd}, {"runs", vals.size()}};
  }
  write_text(out / "aggregate.csv", csv.str());
  mf.add(out / "aggregate.csv");
  write_text(out / "aggregate.json",
             json{{"checkpoints", agg}, {"inputs", inputs}}.dump(2) + "\n");
  mf.add(out / "aggregate.json");
  mf.write();
}

// ---- SVG ------------------------------------------------------------------------------

void svg_line_chart(const fs::path& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<SvgSeries>& series,
                    bool log_y) {
  const double width = 640, height = 400, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const SvgSeries& s : series) {
    for (auto [x, y] : s.points) {
      if (log_y && y <= 0) continue;
      double yy = log_y ? std::log10(y) : y;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, yy);
      ymax = std::max(ymax, yy);
    }
  }
  bool empty = xmin > xmax || ymin > ymax;
  if (empty) {
    xmin = 0; xmax = 1; ymin = 0; ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double y) {
    double yy = log_y ? std::log10(y) : y;
    return height - mb - (yy - ymin) / (ymax - ymin) * (height - mt - mb);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << (mt + height - mb) / 2 << ")\">" << ylabel << (log_y ? " (log)" : "") << "</text>\n";
  // Axis extents.
  svg << "<text x=\"" << ml << "\" y=\"" << height - mb + 16
      << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(xmin, "%g") << "</text>\n";
  svg << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 16
      << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(xmax, "%g") << "</text>\n";
  double ylo = log_y ? std::pow(10.0, ymin) : ymin;
  double yhi = log_y ? std::pow(10.0, ymax) : ymax;
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << height - mb
      << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(ylo, "%.3g") << "</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
      << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(yhi, "%.3g") << "</text>\n";

  int ci = 0;
  for (const SvgSeries& s : series) {
    const char* color = colors[ci % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : s.points) {
      if (log_y && y <= 0) continue;
      svg << fmt(px(x), "%.2f") << "," << fmt(py(y), "%.2f") << " ";
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - mr - 150 << "\" y=\"" << mt + 16 + 16 * ci
        << "\" font-size=\"11\" fill=\"" << color << "\">" << s.label << "</text>\n";
    ++ci;
  }
  svg << "</svg>\n";
  write_text(path, svg.str());
}

}  // namespace rno
