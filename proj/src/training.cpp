// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rno/training.hpp"

#include <chrono>
#include <cmath>

#include "rno/parallel.hpp"
#include "rno/rng.hpp"

namespace rno {

std::string to_string(Strategy s) {
  return s == Strategy::TeacherForcing ? "teacher_forcing" : "recurrent";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "teacher_forcing") return Strategy::TeacherForcing;
  if (s == "recurrent") return Strategy::Recurrent;
  throw ConfigError("train.strategy: unknown strategy '" + s + "'");
}

void TrainConfig::validate() const {
  if (window < 1) throw ConfigError("train.window must be >= 1");
  if (dt <= 0) throw ConfigError("train.dt must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (peak_lr <= 0) throw ConfigError("train.peak_lr must be > 0");
  if (weight_decay < 0) throw ConfigError("train.weight_decay must be >= 0");
  if (clip_norm && *clip_norm <= 0) throw ConfigError("train.clip_norm must be > 0");
  if (threads < 1) throw ConfigError("train.threads must be >= 1");
}

// ---- losses ---------------------------------------------------------------------

Tensor relative_l2_term(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape()) throw ShapeError("relative_l2: shape mismatch");
  double ref = std::sqrt(truth.array().square().sum());
  if (ref == 0.0) throw NumericalError("relative_l2: zero-norm reference field");
  Tensor diff = sub(pred, truth);
  return scale(sqrt(sum(mul(diff, diff))), 1.0 / ref);
}

Tensor loss_rollout(std::span<const Tensor> pred, std::span<const Tensor> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw ShapeError("loss_rollout: prediction/truth window mismatch");
  Tensor total = relative_l2_term(pred[0], truth[0]);
  for (std::size_t n = 1; n < pred.size(); ++n)
    total = add(total, relative_l2_term(pred[n], truth[n]));
  return total;
}

Tensor loss_rollout(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape() || pred.rank() < 2)
    throw ShapeError("loss_rollout: stacked [N,...] tensors required");
  std::vector<Tensor> p, t;
  for (Index n = 0; n < pred.dim(0); ++n) {
    p.push_back(slice_index0(pred, n));
    t.push_back(slice_index0(truth, n));
  }
  return loss_rollout(p, t);
}

// ---- optimizer --------------------------------------------------------------------

OptimizerState OptimizerState::init_for(const NeuralOperator& op) {
  OptimizerState st;
  for (const Parameter& p : op.parameters()) {
    st.m.push_back(Array::Zero(p.value.size()));
    st.v.push_back(Array::Zero(p.value.size()));
  }
  return st;
}

void adamw_step(std::vector<Parameter>& params, const std::vector<Array>& grads,
                OptimizerState& state, double lr, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ContractViolation("adamw: parameter/gradient/state size mismatch");
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Array& p = params[i].value.array_mut();
    const Array& g = grads[i];
    if (p.size() != g.size()) throw ContractViolation("adamw: gradient shape mismatch");
    if (weight_decay != 0.0) p *= (1.0 - lr * weight_decay);
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.square();
    p -= lr * (state.m[i] / bc1) / ((state.v[i] / bc2).sqrt() + state.eps);
  }
}

double global_norm(const std::vector<Array>& grads) {
  double sq = 0.0;
  for (const Array& g : grads) sq += g.square().sum();
  return std::sqrt(sq);
}

double clip_gradients(std::vector<Array>& grads, double max_norm) {
  double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    double f = max_norm / norm;
    for (Array& g : grads) g *= f;
  }
  return norm;
}

long onecycle_peak_step(long total_steps) {
  return std::lround(0.3 * static_cast<double>(total_steps - 1));
}

double onecycle_lr(long step, long total_steps, double peak_lr) {
  if (total_steps < 1) throw ContractViolation("onecycle: empty schedule");
  if (step < 0 || step >= total_steps) throw ContractViolation("onecycle: step out of range");
  if (total_steps == 1) return peak_lr;
  long peak_step = onecycle_peak_step(total_steps);
  double start = peak_lr / 25.0;
  double final_lr = peak_lr / 1e4;
  if (step <= peak_step) {
    if (peak_step == 0) return peak_lr;
    double t = static_cast<double>(step) / static_cast<double>(peak_step);
    return peak_lr - (peak_lr - start) * 0.5 * (1.0 + std::cos(M_PI * t));
  }
  double t = static_cast<double>(step - peak_step) / static_cast<double>(total_steps - 1 - peak_step);
  return final_lr + (peak_lr - final_lr) * 0.5 * (1.0 + std::cos(M_PI * t));
}

// ---- strategies --------------------------------------------------------------------

namespace {

std::vector<Index> shuffled_order(Index n, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    Index j = static_cast<Index>(rng.uniform() * static_cast<double>(i + 1));
    if (j > i) j = i;
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  return order;
}

// Builds one sample's loss graph and returns (loss value, parameter grads).
double sample_pass(const NeuralOperator& op, const TrajectoryDataset& data, Index sample,
                   const TrainConfig& cfg, bool recurrent, std::vector<Array>& grads) {
  Graph g;
  std::vector<Tensor> params = mount_parameters(g, op);
  const Tensor* forcing = data.forcing_ptr();
  int window = cfg.window;

  std::vector<Tensor> truth;
  truth.reserve(static_cast<std::size_t>(window) + 1);
  for (int n = 0; n <= window; ++n) truth.push_back(data.frame(sample, n));

  std::vector<Tensor> preds;
  if (recurrent) {
    std::vector<Tensor> states =
        autoregressive_unroll(op, params, truth[0], forcing, cfg.dt, window);
    preds.assign(states.begin() + 1, states.end());
  } else {
    for (int n = 0; n < window; ++n) {
      Tensor rhs = operator_forward(op, params, operator_input(truth[static_cast<std::size_t>(n)], forcing));
      preds.push_back(add(truth[static_cast<std::size_t>(n)], scale(rhs, cfg.dt)));
    }
  }
  Tensor loss = loss_rollout(preds, std::span<const Tensor>(truth).subspan(1));
  g.backward(loss);
  grads.clear();
  grads.reserve(params.size());
  for (const Tensor& p : params) grads.push_back(g.gradient(p).array());
  return loss.value();
}

TrainResult train_impl(NeuralOperator& op, const TrajectoryDataset& data, const TrainConfig& cfg,
                       bool recurrent) {
  cfg.validate();
  if (data.samples < 1) throw ConfigError("train: dataset has no samples");
  if (cfg.window > data.frames - 1)
    throw ConfigError("train.window exceeds the dataset's stored steps");
  if (std::abs(data.dt - cfg.dt) > 1e-9 * std::max(1.0, std::abs(cfg.dt)))
    throw ConfigError("train.dt does not match the dataset frame spacing");

  Index n_samples = data.samples;
  Index batch = std::min<Index>(cfg.batch_size, n_samples);
  long steps_per_epoch = (n_samples + batch - 1) / batch;
  long total_steps = std::max<long>(1, cfg.epochs * steps_per_epoch);

  OptimizerState state = OptimizerState::init_for(op);
  TrainResult result;
  long global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Index> order = shuffled_order(n_samples, derive_seed(cfg.seed, "shuffle", epoch));
    double epoch_loss = 0.0;
    double last_norm = 0.0, last_lr = 0.0;
    bool warned = false;

    for (Index start = 0; start < n_samples; start += batch) {
      Index bs = std::min(batch, n_samples - start);
      std::vector<double> losses(static_cast<std::size_t>(bs));
      std::vector<std::vector<Array>> sample_grads(static_cast<std::size_t>(bs));
      parallel_for(bs, cfg.threads, [&](Index i) {
        losses[static_cast<std::size_t>(i)] =
            sample_pass(op, data, order[static_cast<std::size_t>(start + i)], cfg, recurrent,
                        sample_grads[static_cast<std::size_t>(i)]);
      });

      // Fixed-order reduction keeps results independent of scheduling.
      std::vector<Array> grads = std::move(sample_grads[0]);
      double batch_loss = losses[0];
      for (Index i = 1; i < bs; ++i) {
        const std::vector<Array>& sg = sample_grads[static_cast<std::size_t>(i)];
        for (std::size_t p = 0; p < grads.size(); ++p) grads[p] += sg[p];
        batch_loss += losses[static_cast<std::size_t>(i)];
      }
      double inv = 1.0 / static_cast<double>(bs);
      for (Array& gr : grads) gr *= inv;
      batch_loss *= inv;

      if (!std::isfinite(batch_loss))
        throw TrainingDivergedError(
            "train: non-finite loss at epoch " + std::to_string(epoch), epoch);

      last_norm = global_norm(grads);
      if (last_norm > 1e6) {
        warned = true;
        result.warnings.push_back("exploding gradient (norm " + std::to_string(last_norm) +
                                  ") at epoch " + std::to_string(epoch));
      }
      if (cfg.clip_norm) clip_gradients(grads, *cfg.clip_norm);
      last_lr = onecycle_lr(global_step, total_steps, cfg.peak_lr);
      adamw_step(op.parameters(), grads, state, last_lr, cfg.weight_decay);
      ++global_step;
      epoch_loss += batch_loss * static_cast<double>(bs);
    }

    auto t1 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = last_lr;
    rec.train_loss = epoch_loss / static_cast<double>(n_samples);
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rec.grad_norm = last_norm;
    rec.grad_warning = warned;
    result.history.push_back(rec);
  }
  return result;
}

}  // namespace

TrainResult train_teacher_forcing(NeuralOperator& op, const TrajectoryDataset& data,
                                  const TrainConfig& cfg) {
  return train_impl(op, data, cfg, /*recurrent=*/false);
}

TrainResult train_recurrent(NeuralOperator& op, const TrajectoryDataset& data,
                            const TrainConfig& cfg) {
  return train_impl(op, data, cfg, /*recurrent=*/true);
}

TrainResult train(NeuralOperator& op, const TrajectoryDataset& data, const TrainConfig& cfg) {
  return cfg.strategy == Strategy::Recurrent ? train_recurrent(op, data, cfg)
                                             : train_teacher_forcing(op, data, cfg);
}

}  // namespace rno
