// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rno/tensor.hpp"

namespace rno {

enum class PdeKind { Heat, AllenCahn, CahnHilliard, NavierStokes };

std::string to_string(PdeKind k);
PdeKind pde_kind_from_string(const std::string& s);

/// A solver or rollout state left the finite range.
struct BlowupError : NumericalError {
  BlowupError(const std::string& msg, int step_, int sample_ = -1)
      : NumericalError(msg), step(step_), sample(sample_) {}
  int step;
  int sample;
};

/// Benchmark problem on the periodic unit square. Fields that do not apply
/// to `kind` are ignored.
struct PdeProblem {
  PdeKind kind = PdeKind::AllenCahn;
  double alpha = 0.01;  // heat diffusivity
  double d1 = 1e-3;     // interfacial coefficient (Allen-Cahn / Cahn-Hilliard)
  double d2 = 1.0;      // reaction strength
  double nu = 1e-3;     // kinematic viscosity
  int grid = 64;        // stored resolution
  int solver_grid = 0;  // reference resolution; 0 means same as grid
  double fine_dt = 0.01;
  double forcing_amplitude = 0.1;

  static PdeProblem defaults(PdeKind kind, int grid, double fine_dt = 0.01);
  int solve_grid() const { return solver_grid > 0 ? solver_grid : grid; }
  bool has_forcing() const {
    return kind == PdeKind::Heat || kind == PdeKind::NavierStokes;
  }
  void validate() const;
};

void to_json(nlohmann::json& j, const PdeProblem& p);
void from_json(const nlohmann::json& j, PdeProblem& p);

struct GpConfig {
  double length_scale = 0.2;
  double jitter = 1e-8;
};

/// Draws one field from the periodic Gaussian process with covariance
/// k(x,x') = exp(-(1/2 l^2) sum_d sin^2(pi (x_d - x'_d))) over the H-by-W
/// grid: dense covariance, jittered Cholesky, field = L z. Grids above
/// 64x64 are sampled at the 64x64 base resolution and upsampled by
/// zero-padded spectral interpolation.
Tensor sample_gp_initial(Index h, Index w, double length_scale, double jitter,
                         std::uint64_t seed);

// ---- reference solvers -------------------------------------------------------
// All solvers integrate n_steps fine steps of size problem.fine_dt on the
// solver grid from u0 [1,N,N] and return every store_every-th frame
// (including the initial state). Nonlinear solvers raise BlowupError when
// |u| exceeds 10 or the state stops being finite.

std::vector<Tensor> solve_heat(const PdeProblem& p, const Tensor& u0, const Tensor& forcing,
                               int n_steps, int store_every = 1);
std::vector<Tensor> solve_allen_cahn(const PdeProblem& p, const Tensor& u0, int n_steps,
                                     int store_every = 1);
std::vector<Tensor> solve_cahn_hilliard(const PdeProblem& p, const Tensor& u0, int n_steps,
                                        int store_every = 1);
std::vector<Tensor> solve_navier_stokes(const PdeProblem& p, const Tensor& w0,
                                        const Tensor& forcing, int n_steps,
                                        int store_every = 1);
/// Dispatch on problem.kind (forcing ignored where it does not apply).
std::vector<Tensor> solve(const PdeProblem& p, const Tensor& u0, const Tensor& forcing,
                          int n_steps, int store_every = 1);

/// Max |div u| over spectral modes of the velocity recovered from vorticity
/// (diagnostic for the streamfunction construction).
double ns_velocity_divergence(const Tensor& w);

/// The static forcing field a problem uses, on an N-by-N grid: an analytic
/// sinusoid for Navier-Stokes, a scaled Gaussian-process draw for heat.
Tensor make_forcing(const PdeProblem& p, Index n, std::uint64_t seed, const GpConfig& gp);

// ---- datasets ------------------------------------------------------------------

/// Reference trajectories [samples, frames, 1, H, W] with frames dt apart.
struct TrajectoryDataset {
  PdeProblem problem;
  double dt = 0.0;
  int store_stride = 1;
  Index samples = 0, frames = 0, channels = 1, height = 0, width = 0;
  Array data;
  Tensor forcing;  // empty when the problem has none; stored-grid resolution
  std::vector<std::uint64_t> sample_seeds;
  std::uint64_t seed = 0;
  GpConfig gp;

  double stored_horizon() const { return dt * static_cast<double>(frames - 1); }
  Index frame_offset(Index s, Index t) const {
    return ((s * frames + t) * channels) * height * width;
  }
  Tensor frame(Index s, Index t) const;
  const Tensor* forcing_ptr() const { return forcing.empty() ? nullptr : &forcing; }
};

/// Deterministic generation: per-sample seeds derive from (seed, index),
/// initial conditions come from the periodic GP, integration runs on the
/// solver grid and frames are point-sampled down to the stored grid.
TrajectoryDataset generate_dataset(const PdeProblem& problem, int n_samples, double horizon,
                                   int store_stride, std::uint64_t seed,
                                   const GpConfig& gp = {}, int threads = 2);

/// Container format: `<base>.json` sidecar plus `<base>.bin` payload of
/// 64-bit little-endian floats in [sample, time, channel, row, col] order
/// (forcing appended when present).
void save_dataset(const std::filesystem::path& base, const TrajectoryDataset& ds);
TrajectoryDataset load_dataset(const std::filesystem::path& json_path);

}  // namespace rno
