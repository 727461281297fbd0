// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rno/spectral.hpp"

#include <complex>
#include <vector>

#include "rno/fft.hpp"

namespace rno {

namespace {

using Complex = std::complex<double>;

void check_field(const Tensor& x, const char* op) {
  if (x.rank() != 3) throw ShapeError(std::string(op) + ": rank-3 field required");
  if (!fft::is_power_of_two(x.dim(1)) || !fft::is_power_of_two(x.dim(2)))
    throw UnsupportedSizeError(std::string(op) + ": grid dimensions must be powers of two");
}

struct RetainedMode {
  Index a, b;    // gamma slots
  Index a2, b2;  // mirror slots
  Index pos;     // flat grid offset of the mode
};

std::vector<RetainedMode> retained_modes(Index m, Index h, Index w) {
  std::vector<RetainedMode> modes;
  modes.reserve(static_cast<std::size_t>(m * m));
  for (Index a = 0; a < m; ++a) {
    Index a2 = spectral_detail::mirror_slot(a, m);
    if (a2 < 0) continue;
    Index gx = (spectral_detail::slot_frequency(a, m) + h) % h;
    for (Index b = 0; b < m; ++b) {
      Index b2 = spectral_detail::mirror_slot(b, m);
      if (b2 < 0) continue;
      Index gy = (spectral_detail::slot_frequency(b, m) + w) % w;
      modes.push_back({a, b, a2, b2, gx * w + gy});
    }
  }
  return modes;
}

// Hermitian-projected multiplier for one retained mode: a dense n*n complex
// matrix 0.5 * (gamma(a,b) + conj(gamma(a2,b2))).
void effective_multiplier(const Array& gre, const Array& gim, Index n, Index m,
                          const RetainedMode& mode, std::vector<Complex>& out) {
  Index mm = m * m;
  Index s1 = mode.a * m + mode.b, s2 = mode.a2 * m + mode.b2;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      Index base = (i * n + j) * mm;
      out[static_cast<std::size_t>(i * n + j)] =
          0.5 * Complex(gre[base + s1] + gre[base + s2], gim[base + s1] - gim[base + s2]);
    }
  }
}

}  // namespace

Tensor spectral_mix(const Tensor& spectrum, const Tensor& gamma_re, const Tensor& gamma_im) {
  if (spectrum.rank() != 3 || spectrum.dim(0) % 2 != 0)
    throw ShapeError("spectral_mix: packed [2n,H,W] spectrum required");
  Index n = spectrum.dim(0) / 2, h = spectrum.dim(1), w = spectrum.dim(2);
  if (gamma_re.rank() != 4 || gamma_re.dim(0) != n || gamma_re.dim(1) != n ||
      gamma_re.dim(2) != gamma_re.dim(3))
    throw ShapeError("spectral_mix: gamma must be [n,n,m,m]");
  if (gamma_im.shape() != gamma_re.shape())
    throw ShapeError("spectral_mix: gamma_re/gamma_im shape mismatch");
  Index m = gamma_re.dim(2);
  if (m > h / 2 || m > w / 2)
    throw ContractViolation("spectral_mix: mode count exceeds half the grid size");

  std::vector<RetainedMode> modes = retained_modes(m, h, w);
  Index plane = h * w;
  const Array& sv = spectrum.array();
  Array out = Array::Zero(sv.size());
  std::vector<Complex> gamma(static_cast<std::size_t>(n * n));
  std::vector<Complex> svec(static_cast<std::size_t>(n)), ovec(static_cast<std::size_t>(n));
  for (const RetainedMode& mode : modes) {
    effective_multiplier(gamma_re.array(), gamma_im.array(), n, m, mode, gamma);
    for (Index j = 0; j < n; ++j)
      svec[static_cast<std::size_t>(j)] = {sv[j * plane + mode.pos],
                                           sv[(n + j) * plane + mode.pos]};
    for (Index i = 0; i < n; ++i) {
      Complex acc{0.0, 0.0};
      for (Index j = 0; j < n; ++j)
        acc += gamma[static_cast<std::size_t>(i * n + j)] * svec[static_cast<std::size_t>(j)];
      out[i * plane + mode.pos] = acc.real();
      out[(n + i) * plane + mode.pos] = acc.imag();
    }
  }

  Graph* g = spectrum.recorded() ? spectrum.graph()
             : gamma_re.recorded() ? gamma_re.graph()
             : gamma_im.recorded() ? gamma_im.graph()
                                   : nullptr;
  if (!g) return Tensor(spectrum.shape(), std::move(out));
  int is = spectrum.recorded() ? spectrum.node() : -1;
  int ire = gamma_re.recorded() ? gamma_re.node() : -1;
  int iim = gamma_im.recorded() ? gamma_im.node() : -1;
  std::vector<int> inputs;
  for (int i : {is, ire, iim})
    if (i >= 0) inputs.push_back(i);
  return g->record(
      "spectral_mix", spectrum.shape(), std::move(out), std::move(inputs),
      [is, ire, iim, spectrum, gamma_re, gamma_im, n, m, h, w,
       modes = std::move(modes)](Graph& gr, int self) {
        Index plane = h * w, mm = m * m;
        const Array& go = gr.grad_array(self);
        const Array& sv = spectrum.array();
        bool want_s = gr.wants(is);
        bool want_g = gr.wants(ire) || gr.wants(iim);
        Array ds, dgre, dgim;
        if (want_s) ds = Array::Zero(sv.size());
        if (want_g) {
          dgre = Array::Zero(gamma_re.size());
          dgim = Array::Zero(gamma_im.size());
        }
        std::vector<Complex> gamma(static_cast<std::size_t>(n * n));
        std::vector<Complex> svec(static_cast<std::size_t>(n)),
            dvec(static_cast<std::size_t>(n));
        for (const RetainedMode& mode : modes) {
          for (Index i = 0; i < n; ++i)
            dvec[static_cast<std::size_t>(i)] = {go[i * plane + mode.pos],
                                                 go[(n + i) * plane + mode.pos]};
          if (want_s) {
            effective_multiplier(gamma_re.array(), gamma_im.array(), n, m, mode, gamma);
            for (Index j = 0; j < n; ++j) {
              Complex acc{0.0, 0.0};
              for (Index i = 0; i < n; ++i)
                acc += std::conj(gamma[static_cast<std::size_t>(i * n + j)]) *
                       dvec[static_cast<std::size_t>(i)];
              ds[j * plane + mode.pos] = acc.real();
              ds[(n + j) * plane + mode.pos] = acc.imag();
            }
          }
          if (want_g) {
            Index s1 = mode.a * m + mode.b, s2 = mode.a2 * m + mode.b2;
            for (Index j = 0; j < n; ++j)
              svec[static_cast<std::size_t>(j)] = {sv[j * plane + mode.pos],
                                                   sv[(n + j) * plane + mode.pos]};
            for (Index i = 0; i < n; ++i) {
              for (Index j = 0; j < n; ++j) {
                Complex dg = dvec[static_cast<std::size_t>(i)] *
                             std::conj(svec[static_cast<std::size_t>(j)]);
                Index base = (i * n + j) * mm;
                dgre[base + s1] += 0.5 * dg.real();
                dgim[base + s1] += 0.5 * dg.imag();
                dgre[base + s2] += 0.5 * dg.real();
                dgim[base + s2] -= 0.5 * dg.imag();
              }
            }
          }
        }
        if (want_s) gr.accumulate(is, ds);
        if (want_g) {
          gr.accumulate(ire, dgre);
          gr.accumulate(iim, dgim);
        }
      });
}

SpectrumField fft2(const Tensor& x) {
  check_field(x, "fft2");
  Index c = x.dim(0);
  Tensor packed = concat_channels(x, Tensor::zeros({c, x.dim(1), x.dim(2)}));
  Tensor s = dft2(packed, -1, false);
  return {slice_channels(s, 0, c), slice_channels(s, c, c)};
}

Tensor ifft2(const SpectrumField& s) {
  check_field(s.re, "ifft2");
  if (s.re.shape() != s.im.shape()) throw ShapeError("ifft2: re/im shape mismatch");
  Index c = s.channels();
  Tensor packed = concat_channels(s.re, s.im);
  Tensor b = dft2(packed, 1, true);
  return slice_channels(b, 0, c);
}

double ifft2_imag_residue(const SpectrumField& s) {
  Index c = s.channels(), h = s.height(), w = s.width();
  Array packed(2 * c * h * w);
  packed.head(c * h * w) = s.re.array();
  packed.tail(c * h * w) = s.im.array();
  Array b = detail::dft2_values(packed, 1, true, c, h, w);
  return b.tail(c * h * w).abs().maxCoeff();
}

double hermitian_residue(const SpectrumField& s) {
  Index c = s.channels(), h = s.height(), w = s.width();
  double worst = 0.0;
  for (Index ch = 0; ch < c; ++ch) {
    for (Index i = 0; i < h; ++i) {
      Index i2 = (h - i) % h;
      for (Index j = 0; j < w; ++j) {
        Index j2 = (w - j) % w;
        double dre = s.re({ch, i, j}) - s.re({ch, i2, j2});
        double dim = s.im({ch, i, j}) + s.im({ch, i2, j2});
        worst = std::max(worst, std::hypot(dre, dim));
      }
    }
  }
  return worst;
}

Tensor spectral_conv(const Tensor& g, const Tensor& gamma_re, const Tensor& gamma_im) {
  check_field(g, "spectral_conv");
  Index n = g.dim(0);
  Tensor packed = concat_channels(g, Tensor::zeros({n, g.dim(1), g.dim(2)}));
  Tensor s = dft2(packed, -1, false);
  Tensor mixed = spectral_mix(s, gamma_re, gamma_im);
  Tensor back = dft2(mixed, 1, true);
  return slice_channels(back, 0, n);
}

}  // namespace rno
