// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "rno/evaluation.hpp"
#include "rno/fft.hpp"
#include "rno/rng.hpp"

using namespace rno;

namespace {

OperatorSpec tiny_spec() {
  OperatorSpec spec;
  spec.variant = OperatorVariant::Mgno;
  spec.layers = 1;
  spec.width = 2;
  spec.levels = 2;
  spec.pattern = {{1, 0}, {1, 0}};
  return spec;
}

}  // namespace

TEST_CASE("rollout: zero steps and the zero operator") {
  NeuralOperator op = NeuralOperator::init(tiny_spec(), 1);
  Tensor u0 = oracle::random_tensor({1, 8, 8}, 2);
  RolloutResult r0 = rollout(op, u0, nullptr, 0.2, 0);
  REQUIRE(r0.trajectory.size() == 1);
  CHECK((r0.trajectory[0].array() - u0.array()).abs().maxCoeff() == 0.0);

  for (Parameter& p : op.parameters()) p.value.array_mut().setZero();
  RolloutResult rz = rollout(op, u0, nullptr, 0.2, 7);
  REQUIRE(rz.trajectory.size() == 8);
  for (const Tensor& s : rz.trajectory)
    CHECK((s.array() - u0.array()).abs().maxCoeff() == 0.0);
  CHECK(!rz.blowup_step);
}

TEST_CASE("rollout: exact heat right-hand side matches a forward-Euler oracle") {
  Index n = 16;
  double alpha = 0.01, dt = 0.05;
  Array ksq(n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double fi = i < n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
      double fj = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
      ksq[i * n + j] = 4.0 * M_PI * M_PI * (fi * fi + fj * fj);
    }
  auto laplacian_rhs = [&](const Tensor& u) {
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n * n));
    for (Index i = 0; i < n * n; ++i) buf[static_cast<std::size_t>(i)] = {u.array()[i], 0.0};
    fft::transform2d(buf.data(), n, n, -1);
    for (Index i = 0; i < n * n; ++i) buf[static_cast<std::size_t>(i)] *= -alpha * ksq[i];
    fft::transform2d(buf.data(), n, n, 1);
    Tensor out({1, n, n});
    for (Index i = 0; i < n * n; ++i)
      out.array_mut()[i] = buf[static_cast<std::size_t>(i)].real() / static_cast<double>(n * n);
    return out;
  };
  Tensor u0 = oracle::random_tensor({1, n, n}, 3);
  RolloutResult r = rollout_with(laplacian_rhs, u0, dt, 10);

  Tensor u = u0;
  for (int k = 1; k <= 10; ++k) {
    Tensor rhs = laplacian_rhs(u);
    u = Tensor(u.shape(), u.array() + dt * rhs.array());
    CHECK((r.trajectory[static_cast<std::size_t>(k)].array() - u.array()).abs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("mean_relative_l2: exact values, hand computation, scale invariance") {
  Tensor t = oracle::random_tensor({3, 1, 2, 2}, 4, 0.5, 1.5);
  CHECK(mean_relative_l2(t, t) == 0.0);
  Tensor twice({3, 1, 2, 2}, 2.0 * t.array());
  CHECK(std::abs(mean_relative_l2(twice, t) - 1.0) < 1e-14);

  Tensor p({2, 1, 2, 2});
  Tensor y({2, 1, 2, 2});
  p.array_mut() << 1, 0, 0, 0, 3, 3, 3, 3;
  y.array_mut() << 1, 1, 1, 1, 1, 1, 1, 1;
  double want = 0.5 * (std::sqrt(3.0) / 2.0 + std::sqrt(16.0) / 2.0);
  CHECK(std::abs(mean_relative_l2(p, y) - want) < 1e-14);

  Tensor pr = oracle::random_tensor({2, 1, 4, 4}, 5);
  Tensor yr = oracle::random_tensor({2, 1, 4, 4}, 6, 0.5, 1.5);
  double base = mean_relative_l2(pr, yr);
  double alpha = 3.7;
  double scaled = mean_relative_l2(Tensor(pr.shape(), alpha * pr.array()),
                                   Tensor(yr.shape(), alpha * yr.array()));
  CHECK(std::abs(base - scaled) < 1e-12);

  CHECK_THROWS_AS(mean_relative_l2(pr, Tensor::zeros({2, 1, 4, 4})), NumericalError);
}

TEST_CASE("convergence_order: published pair, flat errors, dyadic halving") {
  std::vector<double> errs = {8.2e-3, 3.5e-3};
  std::vector<double> sizes = {250.0, 500.0};
  std::vector<double> orders = convergence_order(errs, sizes);
  REQUIRE(orders.size() == 1);
  CHECK(std::abs(orders[0] - 1.228) < 0.01);

  std::vector<double> flat = {4.0e-2, 4.0e-2, 4.0e-2};
  std::vector<double> sz = {100.0, 200.0, 400.0};
  for (double o : convergence_order(flat, sz)) CHECK(o == 0.0);

  std::vector<double> halving = {8.0e-2, 4.0e-2, 2.0e-2};
  for (double o : convergence_order(halving, sz)) CHECK(std::abs(o - 1.0) < 1e-14);

  CHECK_THROWS_AS(convergence_order(std::vector<double>{1.0}, std::vector<double>{1.0}),
                  ContractViolation);
  CHECK_THROWS_AS(convergence_order(std::vector<double>{1.0, -1.0}, sizes), ContractViolation);
  CHECK_THROWS_AS(convergence_order(errs, std::vector<double>{500.0, 250.0}),
                  ContractViolation);
}

TEST_CASE("convergence_order: pairwise orders compose consistently for power laws") {
  // e = C N^-p has the same order on every pair, including the endpoints.
  double p = 1.37;
  std::vector<double> sizes = {100.0, 200.0, 400.0};
  std::vector<double> errs;
  for (double n : sizes) errs.push_back(2.0 * std::pow(n, -p));
  std::vector<double> orders = convergence_order(errs, sizes);
  CHECK(std::abs(orders[0] - p) < 1e-12);
  CHECK(std::abs(orders[1] - p) < 1e-12);
  std::vector<double> ends = convergence_order(std::vector<double>{errs[0], errs[2]},
                                               std::vector<double>{sizes[0], sizes[2]});
  CHECK(std::abs(ends[0] - p) < 1e-12);
}

TEST_CASE("fit_growth: exact linear and exact geometric series") {
  std::vector<double> lin;
  for (int k = 1; k <= 10; ++k) lin.push_back(0.1 * k);
  GrowthFit fl = fit_growth(lin);
  CHECK(fl.selected == GrowthFit::Model::Linear);
  CHECK(std::abs(fl.linear_slope - 0.1) < 1e-10);
  CHECK(std::abs(fl.linear_intercept) < 1e-10);

  std::vector<double> geo;
  for (int k = 1; k <= 10; ++k) geo.push_back(0.01 * std::pow(1.2, k));
  GrowthFit fe = fit_growth(geo);
  CHECK(fe.selected == GrowthFit::Model::Exponential);
  CHECK(std::abs(fe.exp_rate - std::log(1.2)) < 1e-10);
}

TEST_CASE("fit_growth: noisy linear series recovers the slope") {
  Rng rng(2024);
  std::vector<double> e;
  for (int k = 1; k <= 20; ++k) e.push_back(0.1 * k + 1e-3 * rng.normal());
  GrowthFit f = fit_growth(e);
  CHECK(f.selected == GrowthFit::Model::Linear);
  CHECK(std::abs(f.linear_slope - 0.1) / 0.1 < 0.05);
}

TEST_CASE("fit_growth: constant series ties to linear with zero slope") {
  std::vector<double> c(6, 0.25);
  GrowthFit f = fit_growth(c);
  CHECK(f.selected == GrowthFit::Model::Linear);
  CHECK(std::abs(f.linear_slope) < 1e-14);
  CHECK_THROWS_AS(fit_growth(std::vector<double>{1.0, 2.0, 3.0}), ContractViolation);
  CHECK_THROWS_AS(fit_growth(std::vector<double>{1.0, -2.0, 3.0, 4.0}), ContractViolation);
}

TEST_CASE("evaluate_rollout_suite: the perfect operator scores zero everywhere") {
  TrajectoryDataset ds = generate_dataset(PdeProblem::defaults(PdeKind::AllenCahn, 16), 3, 1.0,
                                          20, 777);
  double dt = ds.dt;
  std::vector<int> counters(static_cast<std::size_t>(ds.samples), 0);
  auto perfect = [&](const Tensor& u, Index s) {
    int k = counters[static_cast<std::size_t>(s)]++;
    Tensor next = ds.frame(s, std::min<Index>(k + 1, ds.frames - 1));
    Tensor cur = ds.frame(s, std::min<Index>(k, ds.frames - 1));
    (void)u;
    return Tensor(next.shape(), (next.array() - cur.array()) / dt);
  };
  std::vector<int> cps = {2, 5};
  RolloutSuiteResult r = evaluate_rollout_suite_with(perfect, ds, dt, cps, 1);
  for (double e : r.per_step_mean) CHECK(e < 1e-12);
  CHECK(r.checkpoints.at(2) < 1e-12);
  CHECK(r.checkpoints.at(5) < 1e-12);
  CHECK(r.blowup_count == 0);
}

TEST_CASE("evaluate_rollout_suite: the zero operator's error grows on decaying heat data") {
  TrajectoryDataset ds =
      generate_dataset(PdeProblem::defaults(PdeKind::Heat, 16), 3, 2.0, 20, 778);
  auto zero = [&](const Tensor& u, Index) { return Tensor::zeros(u.shape()); };
  std::vector<int> cps = {1, 10};
  RolloutSuiteResult r = evaluate_rollout_suite_with(zero, ds, ds.dt, cps, 2);
  for (std::size_t k = 1; k < r.per_step_mean.size(); ++k)
    CHECK(r.per_step_mean[k] >= r.per_step_mean[k - 1]);
  CHECK(r.checkpoints.at(10) > r.checkpoints.at(1));
}

TEST_CASE("evaluate_rollout_suite: blow-ups are excluded from means but counted") {
  TrajectoryDataset ds = generate_dataset(PdeProblem::defaults(PdeKind::AllenCahn, 16), 3, 1.0,
                                          20, 779);
  auto exploding = [&](const Tensor& u, Index s) {
    if (s == 1) return Tensor::full(u.shape(), std::numeric_limits<double>::quiet_NaN());
    return Tensor::zeros(u.shape());
  };
  std::vector<int> cps = {3};
  RolloutSuiteResult r = evaluate_rollout_suite_with(exploding, ds, ds.dt, cps, 1);
  CHECK(r.blowup_count == 1);
  CHECK(r.blowup_steps[1] == 1);
  CHECK(r.per_step_count.at(0) == 2);  // sample 1 excluded
  CHECK(std::isfinite(r.checkpoints.at(3)));
}

TEST_CASE("evaluate_rollout_suite: checkpoints beyond the truth are extrapolation-only") {
  TrajectoryDataset ds = generate_dataset(PdeProblem::defaults(PdeKind::AllenCahn, 16), 2, 1.0,
                                          20, 780);
  NeuralOperator op = NeuralOperator::init(tiny_spec(), 5);
  std::vector<int> cps = {2, 50};
  RolloutSuiteResult r = evaluate_rollout_suite(op, ds, ds.dt, cps, 2);
  CHECK(std::isfinite(r.checkpoints.at(2)));
  CHECK(!std::isfinite(r.checkpoints.at(50)));  // 5 truth steps only
}

TEST_CASE("rollout: NaN states truncate the trajectory and record the step") {
  Tensor u0 = oracle::random_tensor({1, 4, 4}, 8);
  int hits = 0;
  auto rhs = [&](const Tensor& u) {
    ++hits;
    if (hits == 3) return Tensor::full(u.shape(), std::numeric_limits<double>::infinity());
    return Tensor(u.shape(), -0.1 * u.array());
  };
  RolloutResult r = rollout_with(rhs, u0, 0.1, 10);
  REQUIRE(r.blowup_step);
  CHECK(*r.blowup_step == 3);
  CHECK(r.trajectory.size() == 3);  // u0, u1, u2 kept
  for (const Tensor& s : r.trajectory) CHECK(s.array().isFinite().all());
}
