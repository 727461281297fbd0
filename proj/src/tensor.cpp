// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rno/tensor.hpp"

#include <cmath>
#include <complex>
#include <utility>

#include "rno/fft.hpp"

namespace rno {

namespace {

Graph* common_graph(std::initializer_list<const Tensor*> ts) {
  Graph* g = nullptr;
  for (const Tensor* t : ts) {
    if (!t->recorded()) continue;
    if (g && g != t->graph())
      throw ContractViolation("ops: operands recorded on different graphs");
    g = t->graph();
  }
  return g;
}

int id_on(Graph* g, const Tensor& t) { return (t.recorded() && t.graph() == g) ? t.node() : -1; }

std::vector<int> input_ids(std::initializer_list<int> ids) {
  std::vector<int> v;
  for (int i : ids)
    if (i >= 0) v.push_back(i);
  return v;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw ShapeError(std::string(op) + ": shape mismatch");
}

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Graph* g = common_graph({&a, &b});
  Array out = a.array() + b.array();
  if (!g) return Tensor(a.shape(), std::move(out));
  int ia = id_on(g, a), ib = id_on(g, b);
  return g->record("add", a.shape(), std::move(out), input_ids({ia, ib}),
                   [ia, ib](Graph& gr, int self) {
                     const Array& go = gr.grad_array(self);
                     gr.accumulate(ia, go);
                     gr.accumulate(ib, go);
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Graph* g = common_graph({&a, &b});
  Array out = a.array() - b.array();
  if (!g) return Tensor(a.shape(), std::move(out));
  int ia = id_on(g, a), ib = id_on(g, b);
  return g->record("sub", a.shape(), std::move(out), input_ids({ia, ib}),
                   [ia, ib](Graph& gr, int self) {
                     const Array& go = gr.grad_array(self);
                     gr.accumulate(ia, go);
                     gr.accumulate(ib, -go);
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Graph* g = common_graph({&a, &b});
  Array out = a.array() * b.array();
  if (!g) return Tensor(a.shape(), std::move(out));
  int ia = id_on(g, a), ib = id_on(g, b);
  return g->record("mul", a.shape(), std::move(out), input_ids({ia, ib}),
                   [ia, ib, a, b](Graph& gr, int self) {
                     const Array& go = gr.grad_array(self);
                     if (gr.wants(ia)) gr.accumulate(ia, go * b.array());
                     if (gr.wants(ib)) gr.accumulate(ib, go * a.array());
                   });
}

Tensor scale(const Tensor& a, double c) {
  Graph* g = common_graph({&a});
  Array out = a.array() * c;
  if (!g) return Tensor(a.shape(), std::move(out));
  int ia = id_on(g, a);
  return g->record("scale", a.shape(), std::move(out), input_ids({ia}),
                   [ia, c](Graph& gr, int self) { gr.accumulate(ia, gr.grad_array(self) * c); });
}

Tensor sum(const Tensor& a) {
  Graph* g = common_graph({&a});
  Array out = Array::Constant(1, a.array().sum());
  if (!g) return Tensor({}, std::move(out));
  int ia = id_on(g, a);
  Index n = a.size();
  return g->record("sum", {}, std::move(out), input_ids({ia}),
                   [ia, n](Graph& gr, int self) {
                     double go = gr.grad_array(self)[0];
                     gr.accumulate(ia, Array::Constant(n, go));
                   });
}

Tensor sqrt(const Tensor& a) {
  Graph* g = common_graph({&a});
  Array out = a.array().sqrt();
  if (!g) return Tensor(a.shape(), std::move(out));
  int ia = id_on(g, a);
  Tensor result = g->record("sqrt", a.shape(), std::move(out), input_ids({ia}),
                            [ia](Graph& gr, int self) {
                              const Array& go = gr.grad_array(self);
                              const Array& y = gr.node(self).value.array();
                              gr.accumulate(ia, go * 0.5 / y);
                            });
  return result;
}

Tensor activation(const Tensor& x) {
  Graph* g = common_graph({&x});
  const Array& v = x.array();
  auto gauss_cdf = [](double t) { return 0.5 * (1.0 + std::erf(t * kInvSqrt2)); };
  Array out = v * v.unaryExpr(gauss_cdf);
  if (!g) return Tensor(x.shape(), std::move(out));
  int ix = id_on(g, x);
  return g->record("gelu", x.shape(), std::move(out), input_ids({ix}),
                   [ix, x, gauss_cdf](Graph& gr, int self) {
                     const Array& go = gr.grad_array(self);
                     const Array& v = x.array();
                     Array phi = v.unaryExpr(gauss_cdf);
                     Array dens = kInvSqrt2Pi * (-0.5 * v * v).exp();
                     gr.accumulate(ix, go * (phi + v * dens));
                   });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw ShapeError("concat_channels: incompatible shapes");
  Index ca = a.dim(0), cb = b.dim(0), h = a.dim(1), w = a.dim(2);
  Array out(a.size() + b.size());
  out.head(a.size()) = a.array();
  out.tail(b.size()) = b.array();
  Graph* g = common_graph({&a, &b});
  std::vector<Index> shape = {ca + cb, h, w};
  if (!g) return Tensor(std::move(shape), std::move(out));
  int ia = id_on(g, a), ib = id_on(g, b);
  Index na = a.size(), nb = b.size();
  return g->record("concat", std::move(shape), std::move(out), input_ids({ia, ib}),
                   [ia, ib, na, nb](Graph& gr, int self) {
                     const Array& go = gr.grad_array(self);
                     if (gr.wants(ia)) gr.accumulate(ia, go.head(na));
                     if (gr.wants(ib)) gr.accumulate(ib, go.tail(nb));
                   });
}

Tensor slice_channels(const Tensor& x, Index begin, Index count) {
  if (x.rank() != 3) throw ShapeError("slice_channels: rank-3 tensor required");
  if (begin < 0 || count <= 0 || begin + count > x.dim(0))
    throw ShapeError("slice_channels: channel range out of bounds");
  Index h = x.dim(1), w = x.dim(2), plane = h * w;
  Array out = x.array().segment(begin * plane, count * plane);
  Graph* g = common_graph({&x});
  std::vector<Index> shape = {count, h, w};
  if (!g) return Tensor(std::move(shape), std::move(out));
  int ix = id_on(g, x);
  Index total = x.size();
  return g->record("slice", std::move(shape), std::move(out), input_ids({ix}),
                   [ix, begin, count, plane, total](Graph& gr, int self) {
                     const Array& go = gr.grad_array(self);
                     Array full = Array::Zero(total);
                     full.segment(begin * plane, count * plane) = go;
                     gr.accumulate(ix, full);
                   });
}

Tensor slice_index0(const Tensor& x, Index i) {
  if (x.rank() < 1) throw ShapeError("slice_index0: rank >= 1 required");
  if (i < 0 || i >= x.dim(0)) throw ShapeError("slice_index0: index out of bounds");
  std::vector<Index> shape(x.shape().begin() + 1, x.shape().end());
  Index block = Tensor::size_of(shape);
  Array out = x.array().segment(i * block, block);
  Graph* g = common_graph({&x});
  if (!g) return Tensor(std::move(shape), std::move(out));
  int ix = id_on(g, x);
  Index total = x.size();
  return g->record("slice0", std::move(shape), std::move(out), input_ids({ix}),
                   [ix, i, block, total](Graph& gr, int self) {
                     Array full = Array::Zero(total);
                     full.segment(i * block, block) = gr.grad_array(self);
                     gr.accumulate(ix, full);
                   });
}

Tensor channel_affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 3) throw ShapeError("channel_affine: rank-3 input required");
  if (weight.rank() != 2 || weight.dim(1) != x.dim(0))
    throw ShapeError("channel_affine: weight shape mismatch");
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0))
    throw ShapeError("channel_affine: bias shape mismatch");
  Index ci = x.dim(0), co = weight.dim(0), h = x.dim(1), w = x.dim(2), plane = h * w;

  using Mat = Eigen::MatrixXd;
  using CMap = Eigen::Map<const Mat>;
  // x viewed as [plane x ci] with channel planes as columns.
  CMap xm(x.array().data(), plane, ci);
  CMap wm(weight.array().data(), ci, co);  // row-major [co,ci] == col-major [ci,co]
  Array out(co * plane);
  Eigen::Map<Mat> om(out.data(), plane, co);
  om.noalias() = xm * wm;
  for (Index o = 0; o < co; ++o) om.col(o).array() += bias.array()[o];

  Graph* g = common_graph({&x, &weight, &bias});
  std::vector<Index> shape = {co, h, w};
  if (!g) return Tensor(std::move(shape), std::move(out));
  int ix = id_on(g, x), iw = id_on(g, weight), ib = id_on(g, bias);
  return g->record(
      "channel_affine", std::move(shape), std::move(out), input_ids({ix, iw, ib}),
      [ix, iw, ib, x, weight, ci, co, plane](Graph& gr, int self) {
        const Array& go = gr.grad_array(self);
        CMap gm(go.data(), plane, co);
        if (gr.wants(ix)) {
          CMap wm(weight.array().data(), ci, co);
          Array gx(ci * plane);
          Eigen::Map<Mat> gxm(gx.data(), plane, ci);
          gxm.noalias() = gm * wm.transpose();
          gr.accumulate(ix, gx);
        }
        if (gr.wants(iw)) {
          CMap xm(x.array().data(), plane, ci);
          Array gw(co * ci);
          Eigen::Map<Mat> gwm(gw.data(), ci, co);  // row-major [co,ci]
          gwm.noalias() = xm.transpose() * gm;
          gr.accumulate(iw, gw);
        }
        if (gr.wants(ib)) {
          Array gb(co);
          for (Index o = 0; o < co; ++o) gb[o] = gm.col(o).sum();
          gr.accumulate(ib, gb);
        }
      });
}

// ---- periodic convolutions -------------------------------------------------

namespace detail {

namespace {

// Scratch for the im2col patch matrix, reused across calls on one thread.
thread_local std::vector<double> g_patches;
thread_local std::vector<Index> g_colidx;

// Fills a column-major [ho*wo x cin*k*k] patch matrix for the periodic
// convolution: column (c,a,b) holds input(c, (i*s+a-r) mod h, (j*s+b-r) mod w)
// over output pixels (i,j). With stride 1 each column is a circular shift
// of the plane, copied as two contiguous runs per row.
double* im2col(const Array& input, int stride, Index cin, Index h, Index w, Index k) {
  Index ho = h / stride, wo = w / stride, r = k / 2;
  Index rows = ho * wo, cols = cin * k * k;
  g_patches.resize(static_cast<std::size_t>(rows * cols));
  double* p = g_patches.data();
  if (stride == 1) {
    for (Index c = 0; c < cin; ++c) {
      const double* plane = input.data() + c * h * w;
      for (Index a = 0; a < k; ++a) {
        Index sr = a - r;
        for (Index b = 0; b < k; ++b) {
          Index sc = ((b - r) % w + w) % w;
          double* col = p + ((c * k + a) * k + b) * rows;
          for (Index i = 0; i < h; ++i) {
            const double* src = plane + ((i + sr + h) % h) * w;
            double* dst = col + i * w;
            Index head = w - sc;
            std::memcpy(dst, src + sc, static_cast<std::size_t>(head) * sizeof(double));
            std::memcpy(dst + head, src, static_cast<std::size_t>(sc) * sizeof(double));
          }
        }
      }
    }
    return p;
  }
  g_colidx.resize(static_cast<std::size_t>(wo));
  for (Index c = 0; c < cin; ++c) {
    const double* plane = input.data() + c * h * w;
    for (Index a = 0; a < k; ++a) {
      for (Index b = 0; b < k; ++b) {
        for (Index j = 0; j < wo; ++j)
          g_colidx[static_cast<std::size_t>(j)] = (j * stride + b - r + w) % w;
        double* col = p + ((c * k + a) * k + b) * rows;
        for (Index i = 0; i < ho; ++i) {
          const double* row = plane + ((i * stride + a - r + h) % h) * w;
          double* dst = col + i * wo;
          for (Index j = 0; j < wo; ++j) dst[j] = row[g_colidx[static_cast<std::size_t>(j)]];
        }
      }
    }
  }
  return p;
}

}  // namespace

Array conv2d_values(const Array& input, const Array& kernel, int stride, Index cin, Index h,
                    Index w, Index cout, Index k) {
  Index ho = h / stride, wo = w / stride;
  Index rows = ho * wo, cols = cin * k * k;
  double* p = im2col(input, stride, cin, h, w, k);
  using Mat = Eigen::MatrixXd;
  Eigen::Map<const Mat> pm(p, rows, cols);
  Eigen::Map<const Mat> km(kernel.data(), cols, cout);  // row-major [cout, cols]^T
  Array out(cout * rows);
  Eigen::Map<Mat> om(out.data(), rows, cout);
  om.noalias() = pm * km;
  return out;
}

Array conv2d_kernel_grad(const Array& input, const Array& grad_out, int stride, Index cin,
                         Index h, Index w, Index cout, Index k) {
  Index ho = h / stride, wo = w / stride;
  Index rows = ho * wo, cols = cin * k * k;
  double* p = im2col(input, stride, cin, h, w, k);
  using Mat = Eigen::MatrixXd;
  Eigen::Map<const Mat> pm(p, rows, cols);
  Eigen::Map<const Mat> gm(grad_out.data(), rows, cout);
  Array gk(cout * cols);
  Eigen::Map<Mat> gkm(gk.data(), cols, cout);
  gkm.noalias() = pm.transpose() * gm;
  return gk;
}

Array conv2d_transposed_values(const Array& input, const Array& kernel, int stride, Index cout,
                               Index h, Index w, Index cin, Index k) {
  // Adjoint of conv2d_values: scatter dP = Y * K back through im2col.
  Index hf = h * stride, wf = w * stride, r = k / 2;
  Index rows = h * w, cols = cin * k * k;
  using Mat = Eigen::MatrixXd;
  Eigen::Map<const Mat> ym(input.data(), rows, cout);
  Eigen::Map<const Mat> km(kernel.data(), cols, cout);
  Mat dp(rows, cols);
  dp.noalias() = ym * km.transpose();
  Array out = Array::Zero(cin * hf * wf);
  if (stride == 1) {
    for (Index c = 0; c < cin; ++c) {
      double* plane = out.data() + c * hf * wf;
      for (Index a = 0; a < k; ++a) {
        Index sr = a - r;
        for (Index b = 0; b < k; ++b) {
          Index sc = ((b - r) % wf + wf) % wf;
          const double* col = dp.data() + ((c * k + a) * k + b) * rows;
          for (Index i = 0; i < h; ++i) {
            double* row = plane + ((i + sr + hf) % hf) * wf;
            const double* src = col + i * wf;
            Index head = wf - sc;
            for (Index j = 0; j < head; ++j) row[sc + j] += src[j];
            for (Index j = 0; j < sc; ++j) row[j] += src[head + j];
          }
        }
      }
    }
    return out;
  }
  std::vector<Index> colidx(static_cast<std::size_t>(w));
  for (Index c = 0; c < cin; ++c) {
    double* plane = out.data() + c * hf * wf;
    for (Index a = 0; a < k; ++a) {
      for (Index b = 0; b < k; ++b) {
        for (Index j = 0; j < w; ++j)
          colidx[static_cast<std::size_t>(j)] = (j * stride + b - r + wf) % wf;
        const double* col = dp.data() + ((c * k + a) * k + b) * rows;
        for (Index i = 0; i < h; ++i) {
          double* row = plane + ((i * stride + a - r + hf) % hf) * wf;
          const double* src = col + i * w;
          for (Index j = 0; j < w; ++j) row[colidx[static_cast<std::size_t>(j)]] += src[j];
        }
      }
    }
  }
  return out;
}

}  // namespace detail

namespace {

void check_conv_args(const Tensor& input, const Tensor& kernel, int stride, const char* op) {
  if (input.rank() != 3) throw ShapeError(std::string(op) + ": rank-3 input required");
  if (kernel.rank() != 4) throw ShapeError(std::string(op) + ": rank-4 kernel required");
  if (kernel.dim(2) != kernel.dim(3) || kernel.dim(2) % 2 == 0)
    throw ShapeError(std::string(op) + ": kernel must be square with odd size");
  if (stride < 1) throw ShapeError(std::string(op) + ": stride must be positive");
}

}  // namespace

Tensor conv2d_periodic(const Tensor& input, const Tensor& kernel, int stride) {
  check_conv_args(input, kernel, stride, "conv2d_periodic");
  Index cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  Index cout = kernel.dim(0), k = kernel.dim(2);
  if (kernel.dim(1) != cin) throw ShapeError("conv2d_periodic: channel mismatch");
  if (h % stride != 0 || w % stride != 0)
    throw ShapeError("conv2d_periodic: grid not divisible by stride");
  Array out = detail::conv2d_values(input.array(), kernel.array(), stride, cin, h, w, cout, k);
  Graph* g = common_graph({&input, &kernel});
  std::vector<Index> shape = {cout, h / stride, w / stride};
  if (!g) return Tensor(std::move(shape), std::move(out));
  int ix = id_on(g, input), ik = id_on(g, kernel);
  return g->record(
      "conv2d", std::move(shape), std::move(out), input_ids({ix, ik}),
      [ix, ik, input, kernel, stride, cin, h, w, cout, k](Graph& gr, int self) {
        const Array& go = gr.grad_array(self);
        if (gr.wants(ix))
          gr.accumulate(ix, detail::conv2d_transposed_values(go, kernel.array(), stride, cout,
                                                             h / stride, w / stride, cin, k));
        if (gr.wants(ik))
          gr.accumulate(ik, detail::conv2d_kernel_grad(input.array(), go, stride, cin, h, w,
                                                       cout, k));
      });
}

Tensor conv2d_transposed_periodic(const Tensor& input, const Tensor& kernel, int stride) {
  check_conv_args(input, kernel, stride, "conv2d_transposed_periodic");
  Index cout = kernel.dim(0), cin = kernel.dim(1), k = kernel.dim(2);
  if (input.dim(0) != cout) throw ShapeError("conv2d_transposed_periodic: channel mismatch");
  Index h = input.dim(1), w = input.dim(2);
  Array out =
      detail::conv2d_transposed_values(input.array(), kernel.array(), stride, cout, h, w, cin, k);
  Graph* g = common_graph({&input, &kernel});
  std::vector<Index> shape = {cin, h * stride, w * stride};
  if (!g) return Tensor(std::move(shape), std::move(out));
  int iy = id_on(g, input), ik = id_on(g, kernel);
  return g->record(
      "conv2d_t", std::move(shape), std::move(out), input_ids({iy, ik}),
      [iy, ik, input, kernel, stride, cout, cin, h, w, k](Graph& gr, int self) {
        const Array& go = gr.grad_array(self);
        if (gr.wants(iy))
          gr.accumulate(iy, detail::conv2d_values(go, kernel.array(), stride, cin, h * stride,
                                                  w * stride, cout, k));
        if (gr.wants(ik))
          gr.accumulate(ik, detail::conv2d_kernel_grad(go, input.array(), stride, cin,
                                                       h * stride, w * stride, cout, k));
      });
}

// ---- packed complex DFT ----------------------------------------------------

namespace detail {

Array dft2_values(const Array& packed, int sign, bool normalize, Index c, Index h, Index w) {
  Array out(packed.size());
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(h * w));
  double norm = normalize ? 1.0 / static_cast<double>(h * w) : 1.0;
  Index plane = h * w;
  for (Index ch = 0; ch < c; ++ch) {
    const double* re = packed.data() + ch * plane;
    const double* im = packed.data() + (c + ch) * plane;
    for (Index i = 0; i < plane; ++i) buf[static_cast<std::size_t>(i)] = {re[i], im[i]};
    fft::transform2d(buf.data(), h, w, sign);
    double* ore = out.data() + ch * plane;
    double* oim = out.data() + (c + ch) * plane;
    for (Index i = 0; i < plane; ++i) {
      ore[i] = buf[static_cast<std::size_t>(i)].real() * norm;
      oim[i] = buf[static_cast<std::size_t>(i)].imag() * norm;
    }
  }
  return out;
}

}  // namespace detail

Tensor dft2(const Tensor& packed, int sign, bool normalize) {
  if (packed.rank() != 3 || packed.dim(0) % 2 != 0)
    throw ShapeError("dft2: packed [2C,H,W] tensor required");
  Index h = packed.dim(1), w = packed.dim(2);
  if (!fft::is_power_of_two(h) || !fft::is_power_of_two(w))
    throw UnsupportedSizeError("dft2: grid dimensions must be powers of two");
  if (sign != 1 && sign != -1) throw ContractViolation("dft2: sign must be +1 or -1");
  Index c = packed.dim(0) / 2;
  Array out = detail::dft2_values(packed.array(), sign, normalize, c, h, w);
  Graph* g = common_graph({&packed});
  if (!g) return Tensor(packed.shape(), std::move(out));
  int ip = id_on(g, packed);
  return g->record("dft2", packed.shape(), std::move(out), input_ids({ip}),
                   // The adjoint of a complex DFT over paired real tensors is the
                   // opposite-sign transform with the same scale factor.
                   [ip, sign, normalize, c, h, w](Graph& gr, int self) {
                     const Array& go = gr.grad_array(self);
                     gr.accumulate(ip, detail::dft2_values(go, -sign, normalize, c, h, w));
                   });
}

// ---- finite-difference gradient checking -----------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                  double step) {
  Graph g;
  Tensor x = g.leaf(point, /*trainable=*/true);
  Tensor loss = f(x);
  if (loss.size() != 1) throw ContractViolation("grad_check: f must return a scalar");
  g.backward(loss);
  Tensor analytic = g.gradient(x);

  Array numeric(point.size());
  for (Index i = 0; i < point.size(); ++i) {
    Tensor xp(point.shape(), point.array());
    xp.array_mut()[i] += step;
   double fp = f(xp).value();
    Tensor xm(point.shape(), point.array());
    xm.array_mut()[i] -= step;
    double fm = f(xm).value();
    numeric[i] = (fp - fm) / (2.0 * step);
  }
  double worst = 0.0;
  for (Index i = 0; i < point.size(); ++i) {
    double a = analytic.array()[i];
    double d = std::abs(a - numeric[i]) / (std::abs(a) + 1e-12);
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace rno
