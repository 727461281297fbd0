// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rno/tensor.hpp"

namespace rno {

/// Complex 2D spectrum of a [C,H,W] field, stored as paired real tensors so
/// spectra can participate in reverse-mode differentiation.
/// Mode (kx, ky) of channel c lives at re/im position (c, kx mod H, ky mod W)
/// with signed frequencies kx in [-H/2, H/2), ky in [-W/2, W/2).
struct SpectrumField {
  Tensor re;
  Tensor im;

  Index channels() const { return re.dim(0); }
  Index height() const { return re.dim(1); }
  Index width() const { return re.dim(2); }
};

/// Unnormalized forward DFT per channel; H and W must be powers of two.
SpectrumField fft2(const Tensor& x);

/// Inverse DFT with 1/(H*W) normalization; the imaginary residue of the
/// result is discarded (it is at roundoff for Hermitian spectra).
Tensor ifft2(const SpectrumField& s);

/// Max |imag| of the inverse transform before it is discarded.
double ifft2_imag_residue(const SpectrumField& s);

/// Max |coeff(k) - conj(coeff(-k))| over channels and modes.
double hermitian_residue(const SpectrumField& s);

/// Truncated spectral channel mixing: forward transform, keep the m lowest
/// signed frequencies per axis (the four corner blocks of the spectrum,
/// frequency set {0..ceil(m/2)-1} u {-floor(m/2)..-1}), mix channels by the
/// complex weights gamma, zero every other mode, inverse transform.
///
/// gamma is [n,n,m,m], split into independent real and imaginary parameter
/// tensors, with slot (a,b) addressing frequencies in FFT order. The
/// effective multiplier is the Hermitian projection
///   0.5 * (gamma(k) + conj(gamma(-k))),
/// which keeps the output of a real input exactly real; for even m the
/// unpaired edge frequency -m/2 has no +m/2 partner and is dropped.
Tensor spectral_conv(const Tensor& g, const Tensor& gamma_re, const Tensor& gamma_im);

/// Tape primitive behind spectral_conv: mode truncation and channel mixing
/// applied to a packed [2n,H,W] spectrum.
Tensor spectral_mix(const Tensor& spectrum, const Tensor& gamma_re, const Tensor& gamma_im);

namespace spectral_detail {
/// Signed frequency addressed by slot a of an m-slot axis (FFT order).
constexpr Index slot_frequency(Index a, Index m) { return a < (m + 1) / 2 ? a : a - m; }
/// Slot of the mirrored frequency, or -1 when -freq(a) is not representable.
constexpr Index mirror_slot(Index a, Index m) {
  if (m % 2 == 0 && a == m / 2) return -1;
  return (m - a) % m;
}
}  // namespace spectral_detail

}  // namespace rno
