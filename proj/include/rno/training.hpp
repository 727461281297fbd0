// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rno/operators.hpp"
#include "rno/pde.hpp"
#include "rno/tensor.hpp"

namespace rno {

enum class Strategy { TeacherForcing, Recurrent };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct TrainingDivergedError : NumericalError {
  TrainingDivergedError(const std::string& msg, int epoch_)
      : NumericalError(msg), epoch(epoch_) {}
  int epoch;
};

struct TrainConfig {
  Strategy strategy = Strategy::Recurrent;
  double dt = 0.2;
  int window = 10;   // N: steps observed during training
  int epochs = 100;
  int batch_size = 32;
  double peak_lr = 1e-3;
  double weight_decay = 1e-5;
  std::optional<double> clip_norm;  // nullopt: no clipping
  std::uint64_t seed = 0;
  int threads = 2;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double wall_ms = 0.0;
  double grad_norm = 0.0;  // pre-clip global norm of the epoch's last step
  bool grad_warning = false;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::vector<std::string> warnings;
};

// ---- losses -------------------------------------------------------------------

/// Relative discrete L2 of one step, |pred - truth|_2 / |truth|_2, with the
/// reference treated as a constant. Throws NumericalError on a zero-norm
/// reference.
Tensor relative_l2_term(const Tensor& pred, const Tensor& truth);

/// Windowed rollout loss: sum over steps of the per-step relative L2.
Tensor loss_rollout(std::span<const Tensor> pred, std::span<const Tensor> truth);
/// Same on stacked [N,C,H,W] tensors.
Tensor loss_rollout(const Tensor& pred, const Tensor& truth);

// ---- optimizer and schedule ------------------------------------------------------

struct OptimizerState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;
  std::vector<Array> m, v;

  static OptimizerState init_for(const NeuralOperator& op);
};

/// Decoupled weight decay (param *= 1 - lr*wd) followed by the bias-corrected
/// Adam update.
void adamw_step(std::vector<Parameter>& params, const std::vector<Array>& grads,
                OptimizerState& state, double lr, double weight_decay);

double global_norm(const std::vector<Array>& grads);
/// Scales grads so the global norm is at most max_norm; returns the pre-clip norm.
double clip_gradients(std::vector<Array>& grads, double max_norm);

/// One-cycle schedule: cosine warmup from peak/25 to the peak over the first
/// 30% of steps, cosine anneal down to peak/1e4 over the rest.
double onecycle_lr(long step, long total_steps, double peak_lr);
long onecycle_peak_step(long total_steps);

// ---- training strategies ----------------------------------------------------------

/// Teacher forcing: every window step predicts from the ground-truth state,
/// u_hat_{n+1} = u_n + dt G(u_n, f), and the per-step relative L2 losses are
/// summed over the window and averaged over the batch.
TrainResult train_teacher_forcing(NeuralOperator& op, const TrajectoryDataset& data,
                                  const TrainConfig& cfg);

/// Recurrent training: the operator is unrolled from the true initial state,
/// feeding each prediction back as the next input; the windowed loss is
/// backpropagated through the whole unroll, so parameter gradients
/// accumulate across the window's reuses of the operator.
TrainResult train_recurrent(NeuralOperator& op, const TrajectoryDataset& data,
                            const TrainConfig& cfg);

/// Dispatch on cfg.strategy.
TrainResult train(NeuralOperator& op, const TrajectoryDataset& data, const TrainConfig& cfg);

}  // namespace rno
