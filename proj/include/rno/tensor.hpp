// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rno {

using Index = Eigen::Index;
using Array = Eigen::ArrayXd;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedSizeError : ShapeError {
  using ShapeError::ShapeError;
};

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Graph;

/// Dense multidimensional array of doubles, flat row-major storage.
/// A Tensor may carry a handle into a Graph when it was produced while
/// gradients were being recorded; plain tensors compute values only.
/// Storage is shared between copies; mutation is allowed only for
/// tensors that are not recorded on a graph.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<Index> shape)
      : shape_(std::move(shape)),
        data_(std::make_shared<Array>(Array::Zero(size_of(shape_)))) {}
  Tensor(std::vector<Index> shape, Array values)
      : shape_(std::move(shape)), data_(std::make_shared<Array>(std::move(values))) {
    if (data_->size() != size_of(shape_))
      throw ShapeError("tensor: element count does not match shape");
  }

  static Tensor zeros(std::vector<Index> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<Index> shape, double value) {
    Index n = size_of(shape);
    return Tensor(std::move(shape), Array::Constant(n, value));
  }
  static Tensor scalar(double value) { return Tensor({}, Array::Constant(1, value)); }

  const std::vector<Index>& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_ ? data_->size() : 0; }
  Index dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  bool empty() const { return !data_; }

  const Array& array() const { return *data_; }
  /// Mutable access; forbidden once the tensor has been recorded.
  Array& array_mut() {
    if (recorded()) throw ContractViolation("tensor: mutation of a recorded tensor");
    return *data_;
  }

  double value() const {
    if (size() != 1) throw ShapeError("tensor: value() requires a scalar");
    return (*data_)[0];
  }

  Index offset(std::initializer_list<Index> idx) const {
    if (static_cast<Index>(idx.size()) != rank())
      throw ShapeError("tensor: index rank mismatch");
    Index off = 0;
    auto it = idx.begin();
    for (std::size_t d = 0; d < shape_.size(); ++d, ++it) off = off * shape_[d] + *it;
    return off;
  }
  double operator()(std::initializer_list<Index> idx) const { return (*data_)[offset(idx)]; }
  double& at(std::initializer_list<Index> idx) {
    if (recorded()) throw ContractViolation("tensor: mutation of a recorded tensor");
    return (*data_)[offset(idx)];
  }

  bool recorded() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  int node() const { return node_; }

  static Index size_of(const std::vector<Index>& shape) {
    Index n = 1;
    for (Index d : shape) {
      if (d <= 0) throw ShapeError("tensor: non-positive dimension");
      n *= d;
    }
    return n;
  }

 private:
  friend class Graph;
  std::vector<Index> shape_;
  std::shared_ptr<Array> data_;
  Graph* graph_ = nullptr;
  int node_ = -1;
};

/// Tape of operations for reverse-mode differentiation. Nodes are appended
/// in execution order, which is a topological order by construction;
/// backward() walks the tape once in reverse. A graph is confined to one
/// thread and is rebuilt for every training step.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  struct Node {
    Tensor value;
    std::vector<int> inputs;
    BackwardFn backward;
    const char* op = "";
    bool trainable = false;
    bool needs_grad = false;
    Array grad;
    bool has_grad = false;
  };

  /// Registers `value` as a leaf and returns a recorded alias of it.
  Tensor leaf(const Tensor& value, bool trainable = false) {
    if (value.recorded()) throw ContractViolation("graph: leaf from a recorded tensor");
    Tensor t = value;
    t.graph_ = this;
    t.node_ = static_cast<int>(nodes_.size());
    Node n;
    n.value = t;
    n.op = trainable ? "param" : "const";
    n.trainable = trainable;
    n.needs_grad = trainable;
    nodes_.push_back(std::move(n));
    return t;
  }

  /// Appends an interior node holding `value` computed from `inputs`.
  Tensor record(const char* op, std::vector<Index> shape, Array values,
                std::vector<int> inputs, BackwardFn backward) {
    Tensor t(std::move(shape), std::move(values));
    t.graph_ = this;
    t.node_ = static_cast<int>(nodes_.size());
    Node n;
    n.value = t;
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
    n.op = op;
    for (int i : n.inputs)
      if (i >= 0 && nodes_[static_cast<std::size_t>(i)].needs_grad) n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return t;
  }

  /// Reverse-mode sweep from a scalar loss. Gradients of all nodes that
  /// influence the loss and depend on a trainable leaf are accumulated;
  /// fan-out sums contributions, so parameters reused many times (e.g. in
  /// a recurrent unroll) receive the sum of their per-use gradients.
  void backward(const Tensor& loss) {
    if (loss.graph() != this) throw ContractViolation("graph: loss from another graph");
    if (loss.size() != 1) throw ContractViolation("graph: backward requires a scalar loss");
    for (Node& n : nodes_) {
      n.grad.resize(0);
      n.has_grad = false;
    }
    Node& top = nodes_[static_cast<std::size_t>(loss.node())];
    top.grad = Array::Constant(1, 1.0);
    top.has_grad = true;
    for (int i = loss.node(); i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.has_grad && n.needs_grad && n.backward) n.backward(*this, i);
    }
  }

  bool wants(int id) const {
    return id >= 0 && nodes_[static_cast<std::size_t>(id)].needs_grad;
  }

  template <class Derived>
  void accumulate(int id, const Eigen::ArrayBase<Derived>& g) {
    if (id < 0) return;
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  const Array& grad_array(int id) const {
    const Node& n = nodes_.at(static_cast<std::size_t>(id));
    if (!n.has_grad) throw ContractViolation("graph: node has no gradient");
    return n.grad;
  }

  bool has_gradient(const Tensor& t) const {
    return t.graph() == this && nodes_[static_cast<std::size_t>(t.node())].has_grad;
  }

  /// Gradient of the last backward() with respect to `t`, as a plain tensor.
  Tensor gradient(const Tensor& t) const {
    if (t.graph() != this) throw ContractViolation("graph: tensor from another graph");
    const Node& n = nodes_[static_cast<std::size_t>(t.node())];
    if (!n.has_grad) return Tensor::zeros(t.shape());
    return Tensor(t.shape(), n.grad);
  }

  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

 private:
  std::vector<Node> nodes_;
};

// ---- elementwise and reduction operations -------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor sum(const Tensor& a);
Tensor sqrt(const Tensor& a);
/// Elementwise GELU, 0.5 x (1 + erf(x / sqrt(2))).
Tensor activation(const Tensor& x);

// ---- channel-structured operations (tensors shaped [C,H,W]) -------------

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, Index begin, Index count);
/// Drops the leading dimension: the i-th slice of x along axis 0.
Tensor slice_index0(const Tensor& x, Index i);
/// Pointwise affine channel map: out[o] = sum_i w(o,i) x[i] + b(o).
Tensor channel_affine(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Periodic 2D convolution. input [Cin,H,W], kernel [Cout,Cin,k,k] with k
/// odd and centered; H, W must be divisible by stride.
/// out[o,i,j] = sum_{c,a,b} kernel(o,c,a,b) input(c, (i*s+a-k/2) mod H, (j*s+b-k/2) mod W)
Tensor conv2d_periodic(const Tensor& input, const Tensor& kernel, int stride = 1);

/// Exact linear adjoint of conv2d_periodic with the same kernel and stride:
/// maps [Cout,h,w] back to [Cin,h*s,w*s].
Tensor conv2d_transposed_periodic(const Tensor& input, const Tensor& kernel, int stride = 1);

/// Complex-to-complex 2D DFT on a packed tensor [2C,H,W] (channels 0..C-1
/// real parts, C..2C-1 imaginary parts). sign -1 is the forward transform,
/// +1 the inverse; `normalize` divides by H*W. H and W must be powers of two.
Tensor dft2(const Tensor& packed, int sign, bool normalize);

// ---- gradient checking ----------------------------------------------------

/// Max over coordinates of |analytic - central difference| / (|analytic| + 1e-12)
/// for a scalar-valued differentiable function of one tensor.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                  double step = 1e-6);

namespace detail {
/// Forward-value helpers shared by the tape ops and their backward passes.
Array conv2d_values(const Array& input, const Array& kernel, int stride, Index cin,
                    Index h, Index w, Index cout, Index k);
Array conv2d_transposed_values(const Array& input, const Array& kernel, int stride,
                               Index cout, Index h, Index w, Index cin, Index k);
Array conv2d_kernel_grad(const Array& input, const Array& grad_out, int stride, Index cin,
                         Index h, Index w, Index cout, Index k);
Array dft2_values(const Array& packed, int sign, bool normalize, Index c, Index h, Index w);
}  // namespace detail

}  // namespace rno
