// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used as test oracles. Everything
// here is written as direct loops or textbook formulas, deliberately
// avoiding the library's GEMM/FFT code paths.

#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "rno/tensor.hpp"

namespace rno::oracle {

Tensor random_tensor(std::vector<Index> shape, std::uint64_t seed, double lo = -1.0,
                     double hi = 1.0);

/// Quadruple-loop periodic convolution, stride s:
/// out[o,i,j] = sum_{c,a,b} k(o,c,a,b) x(c, (i*s+a-r) mod H, (j*s+b-r) mod W).
Tensor conv2d_loop(const Tensor& input, const Tensor& kernel, int stride);

/// Direct scatter adjoint of conv2d_loop.
Tensor conv2d_transposed_loop(const Tensor& input, const Tensor& kernel, int stride);

double inner(const Tensor& a, const Tensor& b);

/// O(N^2)-per-coefficient direct DFT of a real [C,H,W] field (sign -1,
/// unnormalized).
std::vector<std::complex<double>> dft2_loop(const Tensor& x);

/// Direct inverse DFT (sign +1, 1/(HW)); returns the complex field.
std::vector<std::complex<double>> idft2_loop(const std::vector<std::complex<double>>& spec,
                                             Index c, Index h, Index w);

/// Naive spectral channel mixing: direct DFT, Hermitian-projected multiplier
/// on the m lowest signed frequencies per axis, direct inverse, real part.
Tensor spectral_conv_loop(const Tensor& g, const Tensor& gamma_re, const Tensor& gamma_im);

/// Classic RK4 on du/dt = rhs(u) with fixed step.
Array rk4(const std::function<Array(const Array&)>& rhs, Array u0, double dt, int steps);

}  // namespace rno::oracle
