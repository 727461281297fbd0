// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <cmath>

#include "rno/rng.hpp"
#include "rno/spectral.hpp"

namespace rno::oracle {

Tensor random_tensor(std::vector<Index> shape, std::uint64_t seed, double lo, double hi) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (Index i = 0; i < t.size(); ++i) t.array_mut()[i] = rng.uniform(lo, hi);
  return t;
}

Tensor conv2d_loop(const Tensor& input, const Tensor& kernel, int stride) {
  Index cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  Index cout = kernel.dim(0), k = kernel.dim(2), r = k / 2;
  Index ho = h / stride, wo = w / stride;
  Tensor out({cout, ho, wo});
  for (Index o = 0; o < cout; ++o)
    for (Index i = 0; i < ho; ++i)
      for (Index j = 0; j < wo; ++j) {
        double acc = 0.0;
        for (Index c = 0; c < cin; ++c)
          for (Index a = 0; a < k; ++a)
            for (Index b = 0; b < k; ++b) {
              Index si = (i * stride + a - r + h) % h;
              Index sj = (j * stride + b - r + w) % w;
              acc += kernel({o, c, a, b}) * input({c, si, sj});
            }
        out.at({o, i, j}) = acc;
      }
  return out;
}

Tensor conv2d_transposed_loop(const Tensor& input, const Tensor& kernel, int stride) {
  Index cout = kernel.dim(0), cin = kernel.dim(1), k = kernel.dim(2), r = k / 2;
  Index h = input.dim(1), w = input.dim(2);
  Index hf = h * stride, wf = w * stride;
  Tensor out({cin, hf, wf});
  for (Index o = 0; o < cout; ++o)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j)
        for (Index c = 0; c < cin; ++c)
          for (Index a = 0; a < k; ++a)
            for (Index b = 0; b < k; ++b) {
              Index ti = (i * stride + a - r + hf) % hf;
              Index tj = (j * stride + b - r + wf) % wf;
              out.at({c, ti, tj}) += kernel({o, c, a, b}) * input({o, i, j});
            }
  return out;
}

double inner(const Tensor& a, const Tensor& b) { return (a.array() * b.array()).sum(); }

std::vector<std::complex<double>> dft2_loop(const Tensor& x) {
  Index c = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(c * h * w));
  for (Index ch = 0; ch < c; ++ch)
    for (Index ki = 0; ki < h; ++ki)
      for (Index kj = 0; kj < w; ++kj) {
        std::complex<double> acc{0.0, 0.0};
        for (Index i = 0; i < h; ++i)
          for (Index j = 0; j < w; ++j) {
            double ang = -2.0 * M_PI *
                         (static_cast<double>(ki * i) / static_cast<double>(h) +
                          static_cast<double>(kj * j) / static_cast<double>(w));
            acc += x({ch, i, j}) * std::complex<double>(std::cos(ang), std::sin(ang));
          }
        out[static_cast<std::size_t>((ch * h + ki) * w + kj)] = acc;
      }
  return out;
}

std::vector<std::complex<double>> idft2_loop(const std::vector<std::complex<double>>& spec,
                                             Index c, Index h, Index w) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(c * h * w));
  double norm = 1.0 / static_cast<double>(h * w);
  for (Index ch = 0; ch < c; ++ch)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) {
        std::complex<double> acc{0.0, 0.0};
        for (Index ki = 0; ki < h; ++ki)
          for (Index kj = 0; kj < w; ++kj) {
            double ang = 2.0 * M_PI *
                         (static_cast<double>(ki * i) / static_cast<double>(h) +
                          static_cast<double>(kj * j) / static_cast<double>(w));
            acc += spec[static_cast<std::size_t>((ch * h + ki) * w + kj)] *
                   std::complex<double>(std::cos(ang), std::sin(ang));
          }
        out[static_cast<std::size_t>((ch * h + i) * w + j)] = acc * norm;
      }
  return out;
}

Tensor spectral_conv_loop(const Tensor& g, const Tensor& gamma_re, const Tensor& gamma_im) {
  Index n = g.dim(0), h = g.dim(1), w = g.dim(2), m = gamma_re.dim(2);
  std::vector<std::complex<double>> spec = dft2_loop(g);
  std::vector<std::complex<double>> mixed(static_cast<std::size_t>(n * h * w), {0.0, 0.0});
  for (Index a = 0; a < m; ++a) {
    Index a2 = spectral_detail::mirror_slot(a, m);
    if (a2 < 0) continue;
    Index gx = (spectral_detail::slot_frequency(a, m) + h) % h;
    for (Index b = 0; b < m; ++b) {
      Index b2 = spectral_detail::mirror_slot(b, m);
      if (b2 < 0) continue;
      Index gy = (spectral_detail::slot_frequency(b, m) + w) % w;
      for (Index i = 0; i < n; ++i) {
        std::complex<double> acc{0.0, 0.0};
        for (Index j = 0; j < n; ++j) {
          std::complex<double> g1{gamma_re({i, j, a, b}), gamma_im({i, j, a, b})};
          std::complex<double> g2{gamma_re({i, j, a2, b2}), gamma_im({i, j, a2, b2})};
          std::complex<double> mult = 0.5 * (g1 + std::conj(g2));
          acc += mult * spec[static_cast<std::size_t>((j * h + gx) * w + gy)];
        }
        mixed[static_cast<std::size_t>((i * h + gx) * w + gy)] = acc;
      }
    }
  }
  std::vector<std::complex<double>> back = idft2_loop(mixed, n, h, w);
  Tensor out({n, h, w});
  for (Index i = 0; i < out.size(); ++i) out.array_mut()[i] = back[static_cast<std::size_t>(i)].real();
  return out;
}

Array rk4(const std::function<Array(const Array&)>& rhs, Array u, double dt, int steps) {
  for (int s = 0; s < steps; ++s) {
    Array k1 = rhs(u);
    Array k2 = rhs(u + 0.5 * dt * k1);
    Array k3 = rhs(u + 0.5 * dt * k2);
    Array k4 = rhs(u + dt * k3);
    u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

}  // namespace rno::oracle
