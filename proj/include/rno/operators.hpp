// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rno/spectral.hpp"
#include "rno/tensor.hpp"

namespace rno {

enum class OperatorVariant { Fno, Mgno };
enum class Activation { Gelu, Identity };

/// Architecture description. Parameter shapes, counts and ordering are pure
/// functions of the spec.
struct OperatorSpec {
  OperatorVariant variant = OperatorVariant::Mgno;
  int layers = 4;
  int width = 32;
  Activation activation = Activation::Gelu;
  int in_channels = 1;
  int out_channels = 1;

  // FNO
  int modes = 16;

  // MgNO: V-cycle depth, per-level (pre, post) smoothing counts finest
  // first, and the spatial kernel size. An empty pattern selects the
  // default: one pre-smoothing step per level, two on the two coarsest,
  // no post-smoothing.
  int levels = 5;
  std::vector<std::array<int, 2>> pattern;
  int kernel_size = 3;

  static std::vector<std::array<int, 2>> default_pattern(int levels);
  std::vector<std::array<int, 2>> effective_pattern() const;
  void validate() const;
  /// Grid constraints: powers of two for FNO (with modes <= grid/2),
  /// divisibility by 2^(levels-1) for MgNO.
  void check_grid(Index h, Index w) const;
};

struct Parameter {
  std::string name;
  Tensor value;
};

struct ParamShape {
  std::string name;
  std::vector<Index> shape;
};

/// Names and shapes of all parameters of a spec, in their canonical order
/// (lifting map, per-layer kernel weights then bias-combination scalars,
/// output head). This order fixes initialization draws and checkpoint bytes.
std::vector<ParamShape> parameter_layout(const OperatorSpec& spec);

class NeuralOperator {
 public:
  NeuralOperator() = default;

  /// Deterministic initialization: convolution kernels and spectral weights
  /// uniform in [-s, s] with s = 1/sqrt(fan_in), alpha identity plus small
  /// noise, beta and biases zero.
  static NeuralOperator init(const OperatorSpec& spec, std::uint64_t seed);

  const OperatorSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  Index parameter_count() const;
  int find(std::string_view name) const;

 private:
  friend NeuralOperator load_checkpoint(const std::filesystem::path&);
  OperatorSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<Parameter> params_;
};

/// Mounts every parameter on a graph as a trainable leaf, in canonical order.
std::vector<Tensor> mount_parameters(Graph& g, const NeuralOperator& op);

/// Full forward pass g0 = lift(input); g_l = act(K_l g_{l-1} + b_l) with
/// b_l the learnable affine combination of the previous layer's channels;
/// output = head(g_L).
Tensor operator_forward(const NeuralOperator& op, std::span<const Tensor> params,
                        const Tensor& input);
Tensor operator_forward(const NeuralOperator& op, const Tensor& input);

/// Parameters of one V-cycle level. `restrict_kernel`/`prolong_kernel` are
/// empty on the coarsest level.
struct MgnoLevelKernels {
  std::vector<Tensor> pre_a, pre_b;
  std::vector<Tensor> post_a, post_b;
  Tensor restrict_kernel;
  Tensor prolong_kernel;
};

/// Residual-correction smoothing u_k = u_{k-1} + B_k * (f - A_k * u_{k-1}),
/// iterated once per (A, B) pair; zero pairs return u unchanged.
Tensor mgno_smooth(const Tensor& f, const Tensor& u, std::span<const Tensor> a_kernels,
                   std::span<const Tensor> b_kernels);

struct MgnoRestriction {
  Tensor f_coarse;
  Tensor u_coarse;  // always zero
};

/// Restriction to the next-coarser grid: f_coarse = R *_2 (f - A * u), u_coarse = 0.
MgnoRestriction mgno_restrict(const Tensor& f, const Tensor& u, const Tensor& a_kernel,
                              const Tensor& r_kernel);

/// Prolongation back to the finer grid: u_fine + P applied as a stride-2
/// transposed periodic convolution of u_coarse.
Tensor mgno_prolong(const Tensor& u_fine, const Tensor& u_coarse, const Tensor& p_kernel);

/// V-cycle from (f = g, u = 0): pre-smooth and restrict down the hierarchy,
/// smooth at the coarsest level, prolong and post-smooth back up. The
/// restriction residual reuses the A kernel of the level's last
/// pre-smoothing step (with no pre-smoothing the state is still zero and the
/// residual reduces to f).
Tensor mgno_vcycle(const Tensor& g, std::span<const MgnoLevelKernels> levels);

/// Grid shape of each V-cycle level for an H-by-W input.
std::vector<std::pair<Index, Index>> vcycle_level_shapes(Index h, Index w, int levels);

/// Assembles the operator input from the state and the optional static
/// parameter/forcing field (appended as extra channels).
Tensor operator_input(const Tensor& state, const Tensor* forcing);

/// Explicit Euler recursion u_{k+1} = u_k + dt * G(u_k, f), shared by
/// recurrent training and inference rollouts so the two are bitwise
/// identical. Returns [u_0 .. u_n]; `on_step` may stop the recursion early
/// (the offending state is still appended).
std::vector<Tensor> autoregressive_unroll(
    const NeuralOperator& op, std::span<const Tensor> params, const Tensor& u0,
    const Tensor* forcing, double dt, int n_steps,
    const std::function<bool(int, const Tensor&)>& on_step = {});

// ---- checkpoint format ------------------------------------------------------
// A single-line JSON header (spec, seed, version, per-parameter byte offsets)
// followed by a flat blob of 64-bit little-endian floats in canonical
// parameter order.

void save_checkpoint(const std::filesystem::path& path, const NeuralOperator& op);
NeuralOperator load_checkpoint(const std::filesystem::path& path);

std::string to_string(OperatorVariant v);
std::string to_string(Activation a);
OperatorVariant variant_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

}  // namespace rno
