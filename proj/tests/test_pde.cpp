// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "rno/fft.hpp"
#include "rno/pde.hpp"
#include "rno/rng.hpp"

using namespace rno;

namespace {

Tensor scaled_gp(Index n, double scale, std::uint64_t seed) {
  Tensor f = sample_gp_initial(n, n, 0.3, 1e-8, seed);
  return Tensor({1, n, n}, f.array() * scale);
}

double final_diff(const Tensor& a, const Tensor& b) {
  return std::sqrt((a.array() - b.array()).square().sum());
}

double gp_kernel(double dx, double dy, double ell) {
  double sx = std::sin(M_PI * dx), sy = std::sin(M_PI * dy);
  return std::exp(-(sx * sx + sy * sy) / (2.0 * ell * ell));
}

}  // namespace

TEST_CASE("gp: covariance at zero lag is one and the kernel is symmetric") {
  for (double ell : {0.1, 0.2, 1.0}) {
    CHECK(gp_kernel(0.0, 0.0, ell) == 1.0);
    CHECK(gp_kernel(0.3, 0.1, ell) == doctest::Approx(gp_kernel(-0.3, -0.1, ell)).epsilon(1e-15));
  }
}

TEST_CASE("gp: empirical covariance matches the kernel within 3 standard errors") {
  Index n = 8;
  double ell = 0.25;
  int draws = 2000;
  // Two fixed grid points: (1,2) and (3,6).
  Index p = 1 * n + 2, q = 3 * n + 6;
  double sum_p = 0, sum_q = 0, sum_pq = 0, sum_pp = 0;
  for (int d = 0; d < draws; ++d) {
    Tensor f = sample_gp_initial(n, n, ell, 1e-10, derive_seed(4242, "mc", d));
    double vp = f.array()[p], vq = f.array()[q];
    sum_p += vp;
    sum_q += vq;
    sum_pq += vp * vq;
    sum_pp += vp * vp;
  }
  double m = static_cast<double>(draws);
  double cov = sum_pq / m - (sum_p / m) * (sum_q / m);
  double var = sum_pp / m - (sum_p / m) * (sum_p / m);
  double k = gp_kernel((1.0 - 3.0) / 8.0, (2.0 - 6.0) / 8.0, ell);
  double se_cov = std::sqrt((1.0 + k * k) / m);
  double se_var = std::sqrt(2.0 / m);
  CHECK(std::abs(cov - k) < 3.0 * se_cov);
  CHECK(std::abs(var - 1.0) < 3.0 * se_var);
}

TEST_CASE("gp: infinite length scale produces a spatially constant field") {
  Tensor f = sample_gp_initial(4, 4, 1e6, 1e-13, 100);
  CHECK((f.array() - f.array().mean()).abs().maxCoeff() < 1e-6);
}

TEST_CASE("gp: deterministic given the seed and well-defined above the base grid") {
  Tensor a = sample_gp_initial(16, 16, 0.2, 1e-8, 7);
  Tensor b = sample_gp_initial(16, 16, 0.2, 1e-8, 7);
  for (Index i = 0; i < a.size(); ++i) CHECK(a.array()[i] == b.array()[i]);

  // Upsampled draws keep the base-grid values on the coarse lattice.
  Tensor big = sample_gp_initial(128, 128, 0.2, 1e-8, 7);
  CHECK(big.shape() == std::vector<Index>{1, 128, 128});
  Tensor base = sample_gp_initial(64, 64, 0.2, 1e-8, 7);
  double worst = 0.0;
  for (Index i = 0; i < 64; ++i)
    for (Index j = 0; j < 64; ++j)
      worst = std::max(worst, std::abs(big({0, 2 * i, 2 * j}) - base({0, i, j})));
  // Spectral interpolation reproduces base samples up to the dropped Nyquist row/col.
  CHECK(worst < 2e-2);
  CHECK_THROWS_AS(sample_gp_initial(8, 8, -1.0, 1e-8, 1), ConfigError);
}

TEST_CASE("gp: covariance stays positive definite over the length-scale range") {
  for (double ell : {0.05, 0.2, 1.0, 10.0}) {
    Tensor f = sample_gp_initial(16, 16, ell, 1e-8, 3);
    CHECK(f.array().isFinite().all());
  }
}

TEST_CASE("heat: constant field with no source is a steady state") {
  PdeProblem p = PdeProblem::defaults(PdeKind::Heat, 32);
  auto frames = solve_heat(p, Tensor::full({1, 32, 32}, 3.25), Tensor(), 50, 10);
  for (const Tensor& f : frames) CHECK((f.array() - 3.25).abs().maxCoeff() < 1e-13);
}

TEST_CASE("heat: single-mode closed-form decay") {
  Index n = 32;
  PdeProblem p = PdeProblem::defaults(PdeKind::Heat, static_cast<int>(n));
  Tensor u0({1, n, n});
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      u0.at({0, i, j}) = std::sin(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
  auto frames = solve_heat(p, u0, Tensor(), 100, 100);  // t = 1
  double decay = std::exp(-p.alpha * 4.0 * M_PI * M_PI * 1.0);
  CHECK((frames.back().array() - decay * u0.array()).abs().maxCoeff() < 1e-10);
}

TEST_CASE("heat: forced random field matches a fine-step RK4 oracle") {
  Index n = 32;
  PdeProblem p = PdeProblem::defaults(PdeKind::Heat, static_cast<int>(n));
  Tensor u0 = scaled_gp(n, 1.0, 12);
  Tensor f = make_forcing(p, n, 34, GpConfig{});
  auto frames = solve_heat(p, u0, f, 20, 20);  // t = 0.2

  Array ksq(n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double fi = i < n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
      double fj = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
      ksq[i * n + j] = 4.0 * M_PI * M_PI * (fi * fi + fj * fj);
    }
  auto rhs = [&](const Array& u) {
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n * n));
    for (Index i = 0; i < n * n; ++i) buf[static_cast<std::size_t>(i)] = {u[i], 0.0};
    fft::transform2d(buf.data(), n, n, -1);
    for (Index i = 0; i < n * n; ++i) buf[static_cast<std::size_t>(i)] *= -p.alpha * ksq[i];
    fft::transform2d(buf.data(), n, n, 1);
    Array out(n * n);
    for (Index i = 0; i < n * n; ++i)
      out[i] = buf[static_cast<std::size_t>(i)].real() / static_cast<double>(n * n) + f.array()[i];
    return out;
  };
  Array want = oracle::rk4(rhs, u0.array(), p.fine_dt / 100.0, 2000);
  CHECK((frames.back().array() - want).abs().maxCoeff() < 1e-6);
}

TEST_CASE("allen-cahn: 0 and 1 are fixed points") {
  PdeProblem p = PdeProblem::defaults(PdeKind::AllenCahn, 16);
  auto zero = solve_allen_cahn(p, Tensor::zeros({1, 16, 16}), 50, 50);
  CHECK(zero.back().array().abs().maxCoeff() == 0.0);
  auto one = solve_allen_cahn(p, Tensor::full({1, 16, 16}, 1.0), 50, 50);
  CHECK((one.back().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("allen-cahn: uniform state follows the scalar reaction ODE") {
  PdeProblem p = PdeProblem::defaults(PdeKind::AllenCahn, 8);
  p.fine_dt = 2e-5;
  Tensor u0 = Tensor::full({1, 8, 8}, 0.5);
  Tensor got = solve_allen_cahn(p, u0, 50000, 50000).back();  // t = 1
  Array s(1);
  s[0] = 0.5;
  Array want = oracle::rk4(
      [&](const Array& u) {
        Array d(1);
        d[0] = p.d2 * u[0] * (1.0 - u[0] * u[0]);
        return d;
      },
      s, p.fine_dt / 100.0, 5000000);
  CHECK(std::abs(got.array()[0] - want[0]) < 1e-5);
}

TEST_CASE("allen-cahn: magnitude beyond 10 raises a blow-up error") {
  PdeProblem p = PdeProblem::defaults(PdeKind::AllenCahn, 8);
  CHECK_THROWS_AS(solve_allen_cahn(p, Tensor::full({1, 8, 8}, 20.0), 10, 1), BlowupError);
}

TEST_CASE("cahn-hilliard: one is a fixed point and mass is conserved") {
  PdeProblem p = PdeProblem::defaults(PdeKind::CahnHilliard, 16);
  p.fine_dt = 1e-4;
  auto one = solve_cahn_hilliard(p, Tensor::full({1, 16, 16}, 1.0), 50, 50);
  CHECK((one.back().array() - 1.0).abs().maxCoeff() < 1e-12);

  Tensor u0 = scaled_gp(16, 0.5, 77);
  auto frames = solve_cahn_hilliard(p, u0, 100, 1);  // check every step
  double mean0 = u0.array().mean();
  for (const Tensor& f : frames) CHECK(std::abs(f.array().mean() - mean0) < 1e-10);
}

TEST_CASE("cahn-hilliard: step-halving self-convergence is first order") {
  PdeProblem p = PdeProblem::defaults(PdeKind::CahnHilliard, 16);
  // Start from a saturated pattern so the comparison probes the scheme,
  // not the spinodal instability.
  PdeProblem warm = p;
  warm.fine_dt = 2e-5;
  Tensor sat = solve_cahn_hilliard(warm, scaled_gp(16, 0.5, 77), 2500, 2500).back();
  auto fin = [&](double dt, int steps) {
    PdeProblem q = p;
    q.fine_dt = dt;
    return solve_cahn_hilliard(q, sat, steps, steps).back();
  };
  double e1 = final_diff(fin(4e-5, 250), fin(2e-5, 500));
  double e2 = final_diff(fin(2e-5, 500), fin(1e-5, 1000));
  double ratio = e1 / e2;
  CHECK(ratio > 1.7);
  CHECK(ratio < 2.3);
}

TEST_CASE("allen-cahn: step-halving self-convergence is first order") {
  PdeProblem p = PdeProblem::defaults(PdeKind::AllenCahn, 16);
  Tensor u0 = scaled_gp(16, 0.5, 99);
  auto fin = [&](double dt, int steps) {
    PdeProblem q = p;
    q.fine_dt = dt;
    return solve_allen_cahn(q, u0, steps, steps).back();
  };
  double e1 = final_diff(fin(0.01, 50), fin(0.005, 100));
  double e2 = final_diff(fin(0.005, 100), fin(0.0025, 200));
  double ratio = e1 / e2;
  CHECK(ratio > 1.7);
  CHECK(ratio < 2.3);
}

TEST_CASE("navier-stokes: rest state stays at rest") {
  PdeProblem p = PdeProblem::defaults(PdeKind::NavierStokes, 16);
  auto frames = solve_navier_stokes(p, Tensor::zeros({1, 16, 16}), Tensor(), 20, 20);
  CHECK(frames.back().array().abs().maxCoeff() == 0.0);
}

TEST_CASE("navier-stokes: Taylor-Green vortex decays at the closed-form rate") {
  Index n = 32;
  PdeProblem p = PdeProblem::defaults(PdeKind::NavierStokes, static_cast<int>(n));
  p.fine_dt = 1e-3;
  Tensor tg({1, n, n});
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      tg.at({0, i, j}) = std::sin(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)) *
                         std::sin(2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n));
  auto frames = solve_navier_stokes(p, tg, Tensor(), 100, 100);  // t = 0.1
  double decay = std::exp(-p.nu * 8.0 * M_PI * M_PI * 0.1);
  CHECK((frames.back().array() - decay * tg.array()).abs().maxCoeff() < 1e-6);
}

TEST_CASE("navier-stokes: reconstructed velocity is divergence-free at every step") {
  PdeProblem p = PdeProblem::defaults(PdeKind::NavierStokes, 32);
  Tensor w0 = scaled_gp(32, 1.0, 55);
  Tensor f = make_forcing(p, 32, 1, GpConfig{});
  auto frames = solve_navier_stokes(p, w0, f, 20, 2);
  for (const Tensor& fr : frames) CHECK(ns_velocity_divergence(fr) < 1e-10);
}

TEST_CASE("navier-stokes: step-halving self-convergence is first order") {
  PdeProblem p = PdeProblem::defaults(PdeKind::NavierStokes, 32);
  Tensor w0 = scaled_gp(32, 1.0, 55);
  Tensor f = make_forcing(p, 32, 1, GpConfig{});
  auto fin = [&](double dt, int steps) {
    PdeProblem q = p;
    q.fine_dt = dt;
    return solve_navier_stokes(q, w0, f, steps, steps).back();
  };
  double e1 = final_diff(fin(0.01, 50), fin(0.005, 100));
  double e2 = final_diff(fin(0.005, 100), fin(0.0025, 200));
  double ratio = e1 / e2;
  CHECK(ratio > 1.7);
  CHECK(ratio < 2.3);
}

TEST_CASE("generate_dataset: frame counts, determinism, and the empty dataset") {
  PdeProblem p = PdeProblem::defaults(PdeKind::AllenCahn, 32);
  TrajectoryDataset empty = generate_dataset(p, 0, 2.0, 20, 1);
  CHECK(empty.samples == 0);
  CHECK(empty.frames == 11);
  CHECK(empty.data.size() == 0);

  TrajectoryDataset a = generate_dataset(p, 3, 2.0, 20, 42);
  CHECK(a.frames == 11);  // floor(2.0 / 0.2) + 1
  CHECK(a.dt == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(std::abs(a.stored_horizon() - static_cast<double>(a.frames - 1) * a.dt) < 1e-12);
  CHECK(a.data.size() == 3 * 11 * 32 * 32);
  CHECK(a.data.isFinite().all());

  TrajectoryDataset b = generate_dataset(p, 3, 2.0, 20, 42);
  for (Index i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);

  TrajectoryDataset c = generate_dataset(p, 3, 2.0, 20, 43);
  CHECK((a.data - c.data).abs().maxCoeff() > 1e-6);  // different master seed
}

TEST_CASE("generate_dataset: blow-ups carry the sample index") {
  PdeProblem p = PdeProblem::defaults(PdeKind::AllenCahn, 8);
  p.fine_dt = 1.0;  // explicit reaction step far beyond stability
  p.d2 = 50.0;
  try {
    generate_dataset(p, 2, 5.0, 1, 7);
    FAIL("expected BlowupError");
  } catch (const BlowupError& e) {
    CHECK(e.sample >= 0);
    CHECK(e.step >= 1);
  }
}

TEST_CASE("generate_dataset: solver-grid trajectories are point-sampled to the target grid") {
  PdeProblem p = PdeProblem::defaults(PdeKind::AllenCahn, 16);
  p.solver_grid = 32;
  TrajectoryDataset ds = generate_dataset(p, 1, 0.4, 10, 11);
  CHECK(ds.height == 16);

  // Recompute the fine trajectory directly and compare the sampled points.
  PdeProblem fine = p;
  Tensor u0 = sample_gp_initial(32, 32, ds.gp.length_scale, ds.gp.jitter, ds.sample_seeds[0]);
  auto frames = solve_allen_cahn(fine, u0, 40, 10);
  for (Index t = 0; t < ds.frames; ++t) {
    Tensor stored = ds.frame(0, t);
    const Tensor& full = frames[static_cast<std::size_t>(t)];
    double worst = 0.0;
    for (Index i = 0; i < 16; ++i)
      for (Index j = 0; j < 16; ++j)
        worst = std::max(worst, std::abs(stored({0, i, j}) - full({0, 2 * i, 2 * j})));
    CHECK(worst == 0.0);
  }
}

TEST_CASE("dataset containers: save/load round trip and forcing payload") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "rnolab_ds_test";
  fs::create_directories(dir);
  PdeProblem p = PdeProblem::defaults(PdeKind::Heat, 16);
  TrajectoryDataset ds = generate_dataset(p, 2, 1.0, 10, 5);
  REQUIRE(!ds.forcing.empty());
  save_dataset(dir / "ds", ds);
  TrajectoryDataset back = load_dataset(dir / "ds.json");
  CHECK(back.samples == ds.samples);
  CHECK(back.frames == ds.frames);
  CHECK(back.dt == ds.dt);
  CHECK(back.seed == ds.seed);
  CHECK(back.sample_seeds == ds.sample_seeds);
  REQUIRE(back.data.size() == ds.data.size());
  for (Index i = 0; i < ds.data.size(); ++i) CHECK(back.data[i] == ds.data[i]);
  REQUIRE(!back.forcing.empty());
  for (Index i = 0; i < ds.forcing.size(); ++i)
    CHECK(back.forcing.array()[i] == ds.forcing.array()[i]);
}

TEST_CASE("problem validation names the offending field") {
  PdeProblem p = PdeProblem::defaults(PdeKind::Heat, 16);
  p.alpha = -1.0;
  try {
    p.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("problem.alpha") != std::string::npos);
  }
}
