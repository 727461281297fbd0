// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rno/fft.hpp"

#include <cmath>
#include <map>
#include <vector>

#include "rno/tensor.hpp"

namespace rno::fft {

namespace {

// Half-size twiddle table for the forward transform, cached per length.
const std::vector<Complex>& twiddles(Eigen::Index n) {
  thread_local std::map<Eigen::Index, std::vector<Complex>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Complex> tw(static_cast<std::size_t>(n / 2));
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    double ang = -2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    tw[static_cast<std::size_t>(i)] = {std::cos(ang), std::sin(ang)};
  }
  return cache.emplace(n, std::move(tw)).first->second;
}

}  // namespace

void transform(Complex* data, Eigen::Index n, int sign) {
  if (!is_power_of_two(n)) throw UnsupportedSizeError("fft: length must be a power of two");
  if (n == 1) return;
  // Bit-reversal permutation.
  for (Eigen::Index i = 1, j = 0; i < n; ++i) {
    Eigen::Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  const std::vector<Complex>& tw = twiddles(n);
  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    Eigen::Index step = n / len;
    for (Eigen::Index i = 0; i < n; i += len) {
      for (Eigen::Index j = 0; j < len / 2; ++j) {
        Complex w = tw[static_cast<std::size_t>(j * step)];
        if (sign > 0) w = std::conj(w);
        Complex u = data[i + j];
        Complex v = data[i + j + len / 2] * w;
        data[i + j] = u + v;
        data[i + j + len / 2] = u - v;
      }
    }
  }
}

void transform2d(Complex* data, Eigen::Index h, Eigen::Index w, int sign) {
  for (Eigen::Index i = 0; i < h; ++i) transform(data + i * w, w, sign);
  std::vector<Complex> col(static_cast<std::size_t>(h));
  for (Eigen::Index j = 0; j < w; ++j) {
    for (Eigen::Index i = 0; i < h; ++i) col[static_cast<std::size_t>(i)] = data[i * w + j];
    transform(col.data(), h, sign);
    for (Eigen::Index i = 0; i < h; ++i) data[i * w + j] = col[static_cast<std::size_t>(i)];
  }
}

}  // namespace rno::fft
