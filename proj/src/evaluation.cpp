// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rno/evaluation.hpp"

#include <cmath>
#include <limits>

#include "rno/parallel.hpp"

namespace rno {

namespace {

RolloutResult finish_rollout(std::vector<Tensor> states, std::optional<int> blowup,
                             std::span<const Tensor> truth) {
  RolloutResult r;
  r.blowup_step = blowup;
  r.trajectory = std::move(states);
  if (!truth.empty()) {
    std::size_t n_cmp = std::min(r.trajectory.size(), truth.size());
    for (std::size_t k = 1; k < n_cmp; ++k)
      r.errors.push_back(relative_l2(r.trajectory[k], truth[k]));
  }
  return r;
}

}  // namespace

RolloutResult rollout(const NeuralOperator& op, const Tensor& u0, const Tensor* forcing,
                      double dt, int n_steps, std::span<const Tensor> truth) {
  if (n_steps < 0) throw ContractViolation("rollout: negative step count");
  std::vector<Tensor> raw;
  raw.reserve(op.parameters().size());
  for (const Parameter& p : op.parameters()) raw.push_back(p.value);
  std::optional<int> blowup;
  std::vector<Tensor> states =
      autoregressive_unroll(op, raw, u0, forcing, dt, n_steps, [&](int step, const Tensor& s) {
        if (!s.array().isFinite().all()) {
          blowup = step;
          return false;
        }
        return true;
      });
  if (blowup) states.pop_back();  // drop the non-finite state
  return finish_rollout(std::move(states), blowup, truth);
}

RolloutResult rollout_with(const std::function<Tensor(const Tensor&)>& rhs, const Tensor& u0,
                           double dt, int n_steps, std::span<const Tensor> truth) {
  if (n_steps < 0) throw ContractViolation("rollout: negative step count");
  std::vector<Tensor> states;
  states.push_back(u0);
  std::optional<int> blowup;
  for (int k = 0; k < n_steps; ++k) {
    Tensor next = add(states.back(), scale(rhs(states.back()), dt));
    if (!next.array().isFinite().all()) {
      blowup = k + 1;
      break;
    }
    states.push_back(next);
  }
  return finish_rollout(std::move(states), blowup, truth);
}

double relative_l2(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape()) throw ShapeError("relative_l2: shape mismatch");
  double ref = std::sqrt(truth.array().square().sum());
  if (ref == 0.0) throw NumericalError("relative_l2: zero-norm reference field");
  return std::sqrt((pred.array() - truth.array()).square().sum()) / ref;
}

double mean_relative_l2(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape() || pred.rank() < 2)
    throw ShapeError("mean_relative_l2: stacked [B,...] tensors required");
  Index b = pred.dim(0);
  Index block = pred.size() / b;
  double acc = 0.0;
  for (Index i = 0; i < b; ++i) {
    double ref = std::sqrt(truth.array().segment(i * block, block).square().sum());
    if (ref == 0.0) throw NumericalError("mean_relative_l2: zero-norm reference sample");
    acc += std::sqrt((pred.array().segment(i * block, block) -
                      truth.array().segment(i * block, block))
                         .square()
                         .sum()) /
           ref;
  }
  return acc / static_cast<double>(b);
}

std::vector<double> convergence_order(std::span<const double> errors,
                                      std::span<const double> sizes) {
  if (errors.size() != sizes.size() || errors.size() < 2)
    throw ContractViolation("convergence_order: need matching lists of length >= 2");
  for (double e : errors)
    if (!(e > 0.0)) throw ContractViolation("convergence_order: errors must be positive");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    if (!(sizes[i] > 0.0) || sizes[i + 1] <= sizes[i])
      throw ContractViolation("convergence_order: sizes must be positive and increasing");
  std::vector<double> orders;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i)
    orders.push_back(-std::log(errors[i + 1] / errors[i]) / std::log(sizes[i + 1] / sizes[i]));
  return orders;
}

GrowthFit fit_growth(std::span<const double> errors) {
  std::size_t n = errors.size();
  if (n < 4) throw ContractViolation("fit_growth: at least 4 points required");
  for (double e : errors)
    if (!(e > 0.0)) throw ContractViolation("fit_growth: errors must be positive");

  // Least squares on (k, e_k) and (k, log e_k), k = 1..n.
  double sx = 0, sxx = 0, sy = 0, sxy = 0, sl = 0, sxl = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = static_cast<double>(i + 1);
    sx += x;
    sxx += x * x;
    sy += errors[i];
    sxy += x * errors[i];
    double l = std::log(errors[i]);
    sl += l;
    sxl += x * l;
  }
  double dn = static_cast<double>(n);
  double det = dn * sxx - sx * sx;
  GrowthFit fit;
  fit.linear_slope = (dn * sxy - sx * sy) / det;
  fit.linear_intercept = (sy - fit.linear_slope * sx) / dn;
  fit.exp_rate = (dn * sxl - sx * sl) / det;
  fit.exp_log_amplitude = (sl - fit.exp_rate * sx) / dn;
  fit.mean_error = sy / dn;

  for (std::size_t i = 0; i < n; ++i) {
    double x = static_cast<double>(i + 1);
    double rl = errors[i] - (fit.linear_intercept + fit.linear_slope * x);
    double re = errors[i] - std::exp(fit.exp_log_amplitude + fit.exp_rate * x);
    fit.linear_rss += rl * rl;
    fit.exp_rss += re * re;
  }
  double ref = std::max(fit.linear_rss, fit.exp_rss);
  if (ref == 0.0 || std::abs(fit.linear_rss - fit.exp_rss) < 0.01 * ref)
    fit.selected = GrowthFit::Model::Linear;  // tie band prefers the weaker claim
  else
    fit.selected = fit.exp_rss < fit.linear_rss ? GrowthFit::Model::Exponential
                                                : GrowthFit::Model::Linear;
  return fit;
}

namespace {

using SampleRollout = std::function<RolloutResult(Index, std::span<const Tensor>, int)>;

RolloutSuiteResult run_suite(const TrajectoryDataset& test, std::span<const int> checkpoints,
                             int threads, const SampleRollout& roll) {
  if (test.samples < 1) throw ContractViolation("evaluate: empty test set");
  int max_cp = 0;
  for (int c : checkpoints) {
    if (c < 1) throw ContractViolation("evaluate: checkpoints must be >= 1");
    max_cp = std::max(max_cp, c);
  }
  int truth_steps = static_cast<int>(test.frames) - 1;
  int n_steps = std::max(max_cp, truth_steps);

  Index s_count = test.samples;
  std::vector<std::vector<double>> errs(static_cast<std::size_t>(s_count));
  RolloutSuiteResult out;
  out.blowup_steps.assign(static_cast<std::size_t>(s_count), -1);

  parallel_for(s_count, threads, [&](Index s) {
    std::vector<Tensor> truth;
    truth.reserve(static_cast<std::size_t>(test.frames));
    for (Index t = 0; t < test.frames; ++t) truth.push_back(test.frame(s, t));
    RolloutResult r = roll(s, truth, n_steps);
    errs[static_cast<std::size_t>(s)] = std::move(r.errors);
    if (r.blowup_step) out.blowup_steps[static_cast<std::size_t>(s)] = *r.blowup_step;
  });

  out.per_step_mean.assign(static_cast<std::size_t>(truth_steps), 0.0);
  out.per_step_count.assign(static_cast<std::size_t>(truth_steps), 0);
  for (Index s = 0; s < s_count; ++s) {
    int bs = out.blowup_steps[static_cast<std::size_t>(s)];
    if (bs >= 0) ++out.blowup_count;
    const std::vector<double>& e = errs[static_cast<std::size_t>(s)];
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (bs >= 0 && static_cast<int>(k + 1) >= bs) break;
      out.per_step_mean[k] += e[k];
      out.per_step_count[k] += 1;
    }
  }
  for (std::size_t k = 0; k < out.per_step_mean.size(); ++k)
    out.per_step_mean[k] = out.per_step_count[k] > 0
                               ? out.per_step_mean[k] / static_cast<double>(out.per_step_count[k])
                               : std::numeric_limits<double>::quiet_NaN();
  for (int c : checkpoints)
    out.checkpoints[c] = c <= truth_steps ? out.per_step_mean[static_cast<std::size_t>(c - 1)]
                                          : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace

RolloutSuiteResult evaluate_rollout_suite(const NeuralOperator& op,
                                          const TrajectoryDataset& test, double dt,
                                          std::span<const int> checkpoints, int threads) {
  const Tensor* forcing = test.forcing_ptr();
  return run_suite(test, checkpoints, threads,
                   [&](Index, std::span<const Tensor> truth, int n_steps) {
                     return rollout(op, truth[0], forcing, dt, n_steps, truth);
                   });
}

RolloutSuiteResult evaluate_rollout_suite_with(
    const std::function<Tensor(const Tensor&, Index)>& rhs, const TrajectoryDataset& test,
    double dt, std::span<const int> checkpoints, int threads) {
  return run_suite(test, checkpoints, threads,
                   [&](Index s, std::span<const Tensor> truth, int n_steps) {
                     return rollout_with([&](const Tensor& u) { return rhs(u, s); }, truth[0], dt,
                                         n_steps, truth);
                   });
}

}  // namespace rno
