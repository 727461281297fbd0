// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rno/operators.hpp"
#include "rno/pde.hpp"

namespace rno {

/// Autoregressive prediction from one initial state.
struct RolloutResult {
  std::vector<Tensor> trajectory;  // finite states, u_0 first
  std::vector<double> errors;      // per-step relative L2 against provided truth
  std::optional<int> blowup_step;  // first non-finite step, when any
};

/// u_{k+1} = u_k + dt G(u_k, f) without gradient recording; arithmetic is
/// identical to the recurrent-training unroll. Truth, when given, must start
/// at the same frame as u0; errors cover steps 1..min(n_steps, truth-1).
RolloutResult rollout(const NeuralOperator& op, const Tensor& u0, const Tensor* forcing,
                      double dt, int n_steps, std::span<const Tensor> truth = {});

/// Rollout of an arbitrary right-hand side (test hooks, exact dynamics).
RolloutResult rollout_with(const std::function<Tensor(const Tensor&)>& rhs, const Tensor& u0,
                           double dt, int n_steps, std::span<const Tensor> truth = {});

/// Relative discrete L2 of a single pair over all components.
double relative_l2(const Tensor& pred, const Tensor& truth);

/// Mean over the leading (sample) axis of per-sample relative L2 errors,
/// pred and truth shaped [B,C,H,W].
double mean_relative_l2(const Tensor& pred, const Tensor& truth);

/// Error-decay orders -log(e_{i+1}/e_i) / log(N_{i+1}/N_i) for consecutive
/// pairs (positive when errors shrink as sizes grow).
std::vector<double> convergence_order(std::span<const double> errors,
                                      std::span<const double> sizes);

/// Least-squares comparison of linear and exponential growth models for a
/// per-step error curve, residuals compared on the original scale. Ties
/// within 1% report linear (the weaker growth claim).
struct GrowthFit {
  double linear_intercept = 0.0, linear_slope = 0.0, linear_rss = 0.0;
  double exp_log_amplitude = 0.0, exp_rate = 0.0, exp_rss = 0.0;
  double mean_error = 0.0;
  enum class Model { Linear, Exponential } selected = Model::Linear;

  /// Growth parameter on a common scale: the exponential rate, or the
  /// linear slope normalized by the mean error.
  double growth_rate() const {
    return selected == Model::Exponential ? exp_rate : linear_slope / mean_error;
  }
};

GrowthFit fit_growth(std::span<const double> errors);

/// Checkpoint errors and per-step curves over a test set. Samples that blow
/// up are excluded from means from the offending step on, but counted.
struct RolloutSuiteResult {
  std::vector<double> per_step_mean;  // entry k-1 = mean error at step k
  std::vector<Index> per_step_count;
  std::map<int, double> checkpoints;  // NaN marks extrapolation-only steps
  std::vector<int> blowup_steps;      // per sample, -1 when none
  int blowup_count = 0;
};

RolloutSuiteResult evaluate_rollout_suite(const NeuralOperator& op,
                                          const TrajectoryDataset& test, double dt,
                                          std::span<const int> checkpoints, int threads = 2);

/// Test-hook variant: the right-hand side may depend on the sample index.
RolloutSuiteResult evaluate_rollout_suite_with(
    const std::function<Tensor(const Tensor&, Index)>& rhs, const TrajectoryDataset& test,
    double dt, std::span<const int> checkpoints, int threads = 2);

}  // namespace rno
