// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>

#include <Eigen/Dense>

namespace rno::fft {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place radix-2 transform of length n (a power of two).
/// sign -1: forward, unnormalized; sign +1: inverse, unnormalized.
void transform(Complex* data, Eigen::Index n, int sign);

/// In-place 2D transform of a row-major h-by-w buffer (rows, then columns).
void transform2d(Complex* data, Eigen::Index h, Eigen::Index w, int sign);

}  // namespace rno::fft
