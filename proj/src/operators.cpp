// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rno/operators.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rno/fft.hpp"
#include "rno/rng.hpp"

namespace rno {

using nlohmann::json;

// ---- spec ------------------------------------------------------------------

std::vector<std::array<int, 2>> OperatorSpec::default_pattern(int levels) {
  std::vector<std::array<int, 2>> p(static_cast<std::size_t>(levels), {1, 0});
  for (int v = std::max(0, levels - 2); v < levels; ++v)
    p[static_cast<std::size_t>(v)] = {2, 0};
  return p;
}

std::vector<std::array<int, 2>> OperatorSpec::effective_pattern() const {
  return pattern.empty() ? default_pattern(levels) : pattern;
}

void OperatorSpec::validate() const {
  if (layers < 1) throw ContractViolation("spec: layers must be >= 1");
  if (width < 1) throw ContractViolation("spec: width must be >= 1");
  if (in_channels < 1 || out_channels < 1)
    throw ContractViolation("spec: channel counts must be >= 1");
  if (variant == OperatorVariant::Fno) {
    if (modes < 1) throw ContractViolation("spec: modes must be >= 1");
  } else {
    if (levels < 1) throw ContractViolation("spec: levels must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
      throw ContractViolation("spec: kernel size must be odd");
    auto p = effective_pattern();
    if (static_cast<int>(p.size()) != levels)
      throw ContractViolation("spec: pattern must have one (pre, post) entry per level");
    for (const auto& e : p)
      if (e[0] < 0 || e[1] < 0) throw ContractViolation("spec: negative smoothing count");
    if (p.back()[1] != 0)
      throw ContractViolation("spec: the coarsest level has no post-smoothing slot");
  }
}

void OperatorSpec::check_grid(Index h, Index w) const {
  if (variant == OperatorVariant::Fno) {
    if (!fft::is_power_of_two(h) || !fft::is_power_of_two(w))
      throw ShapeError("spec: FNO requires power-of-two grids");
    if (modes > h / 2 || modes > w / 2)
      throw ContractViolation("spec: FNO modes exceed half the grid size");
  } else {
    Index div = Index(1) << (levels - 1);
    if (h % div != 0 || w % div != 0)
      throw ShapeError("spec: grid not divisible by 2^(levels-1)");
  }
}

// ---- parameter layout --------------------------------------------------------

std::vector<ParamShape> parameter_layout(const OperatorSpec& spec) {
  spec.validate();
  std::vector<ParamShape> out;
  Index n = spec.width, k = spec.kernel_size, m = spec.modes;
  out.push_back({"lift.weight", {n, spec.in_channels}});
  out.push_back({"lift.bias", {n}});
  auto pattern = spec.effective_pattern();
  for (int l = 0; l < spec.layers; ++l) {
    std::string lp = "layers." + std::to_string(l) + ".";
    if (spec.variant == OperatorVariant::Fno) {
      out.push_back({lp + "gamma_re", {n, n, m, m}});
      out.push_back({lp + "gamma_im", {n, n, m, m}});
    } else {
      for (int v = 0; v < spec.levels; ++v) {
        std::string vp = lp + "levels." + std::to_string(v) + ".";
        for (int s = 0; s < pattern[static_cast<std::size_t>(v)][0]; ++s) {
          out.push_back({vp + "pre." + std::to_string(s) + ".a", {n, n, k, k}});
          out.push_back({vp + "pre." + std::to_string(s) + ".b", {n, n, k, k}});
        }
        if (v + 1 < spec.levels) {
          out.push_back({vp + "restrict", {n, n, k, k}});
          out.push_back({vp + "prolong", {n, n, k, k}});
          for (int s = 0; s < pattern[static_cast<std::size_t>(v)][1]; ++s) {
            out.push_back({vp + "post." + std::to_string(s) + ".a", {n, n, k, k}});
            out.push_back({vp + "post." + std::to_string(s) + ".b", {n, n, k, k}});
          }
        }
      }
    }
    out.push_back({lp + "alpha", {n, n}});
    out.push_back({lp + "beta", {n}});
  }
  out.push_back({"head.weight", {spec.out_channels, n}});
  out.push_back({"head.bias", {spec.out_channels}});
  return out;
}

NeuralOperator NeuralOperator::init(const OperatorSpec& spec, std::uint64_t seed) {
  NeuralOperator op;
  op.spec_ = spec;
  op.seed_ = seed;
  Rng rng(seed);
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (ParamShape& ps : parameter_layout(spec)) {
    Tensor t(ps.shape);
    Array& a = t.array_mut();
    const std::string& name = ps.name;
    if (ends_with(name, ".a") || ends_with(name, ".b") || ends_with(name, "restrict") ||
        ends_with(name, "prolong")) {
      double s = 1.0 / std::sqrt(static_cast<double>(ps.shape[1] * ps.shape[2] * ps.shape[3]));
      for (Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(-s, s);
    } else if (ends_with(name, "gamma_re") || ends_with(name, "gamma_im")) {
      double s = 1.0 / std::sqrt(static_cast<double>(ps.shape[1]));
      for (Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(-s, s);
    } else if (ends_with(name, ".weight")) {
      double s = 1.0 / std::sqrt(static_cast<double>(ps.shape[1]));
      for (Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(-s, s);
    } else if (ends_with(name, "alpha")) {
      Index n = ps.shape[0];
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) a[i * n + j] = (i == j ? 1.0 : 0.0) + 0.01 * rng.uniform(-1.0, 1.0);
    }
    // beta and biases stay zero.
    op.params_.push_back({std::move(ps.name), std::move(t)});
  }
  return op;
}

Index NeuralOperator::parameter_count() const {
  Index n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

int NeuralOperator::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return static_cast<int>(i);
  throw ContractViolation("operator: unknown parameter " + std::string(name));
}

std::vector<Tensor> mount_parameters(Graph& g, const NeuralOperator& op) {
  std::vector<Tensor> mounted;
  mounted.reserve(op.parameters().size());
  for (const Parameter& p : op.parameters()) mounted.push_back(g.leaf(p.value, true));
  return mounted;
}

// ---- MgNO building blocks ----------------------------------------------------

namespace {
void check_same_shape_3d(const Tensor& f, const Tensor& u) {
  if (f.rank() != 3 || f.shape() != u.shape())
    throw ShapeError("mgno: f and u must be rank-3 fields with equal shapes");
}
}  // namespace

Tensor mgno_smooth(const Tensor& f, const Tensor& u, std::span<const Tensor> a_kernels,
                   std::span<const Tensor> b_kernels) {
  if (a_kernels.size() != b_kernels.size())
    throw ShapeError("mgno_smooth: kernel pair count mismatch");
  check_same_shape_3d(f, u);
  Tensor state = u;
  for (std::size_t s = 0; s < a_kernels.size(); ++s) {
    Tensor resid = sub(f, conv2d_periodic(state, a_kernels[s], 1));
    state = add(state, conv2d_periodic(resid, b_kernels[s], 1));
  }
  return state;
}

MgnoRestriction mgno_restrict(const Tensor& f, const Tensor& u, const Tensor& a_kernel,
                              const Tensor& r_kernel) {
  check_same_shape_3d(f, u);
  if (f.dim(1) % 2 != 0 || f.dim(2) % 2 != 0)
    throw ShapeError("mgno_restrict: odd grid cannot be halved");
  Tensor resid = sub(f, conv2d_periodic(u, a_kernel, 1));
  Tensor fc = conv2d_periodic(resid, r_kernel, 2);
  return {fc, Tensor::zeros(fc.shape())};
}

Tensor mgno_prolong(const Tensor& u_fine, const Tensor& u_coarse, const Tensor& p_kernel) {
  Tensor up = conv2d_transposed_periodic(u_coarse, p_kernel, 2);
  return add(u_fine, up);
}

std::vector<std::pair<Index, Index>> vcycle_level_shapes(Index h, Index w, int levels) {
  std::vector<std::pair<Index, Index>> shapes;
  for (int v = 0; v < levels; ++v) shapes.emplace_back(h >> v, w >> v);
  return shapes;
}

namespace {

// Level state during the V-cycle. A structurally zero u is kept symbolic so
// convolutions against it are skipped; the results are bitwise identical to
// the general path because x - 0 == x and conv(0) == 0 exactly.
struct LevelState {
  Tensor f;
  Tensor u;
  bool u_zero = true;
};

void smooth_in_place(LevelState& st, const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (st.u_zero) {
      st.u = conv2d_periodic(st.f, b[s], 1);
      st.u_zero = false;
    } else {
      Tensor resid = sub(st.f, conv2d_periodic(st.u, a[s], 1));
      st.u = add(st.u, conv2d_periodic(resid, b[s], 1));
    }
  }
}

}  // namespace

Tensor mgno_vcycle(const Tensor& g, std::span<const MgnoLevelKernels> levels) {
  if (levels.empty()) throw ContractViolation("mgno_vcycle: at least one level required");
  int depth = static_cast<int>(levels.size());
  Index h = g.dim(1), w = g.dim(2);
  Index div = Index(1) << (depth - 1);
  if (h % div != 0 || w % div != 0)
    throw ShapeError("mgno_vcycle: grid not divisible by 2^(levels-1)");

  std::vector<LevelState> stack;
  LevelState st{g, Tensor(), true};
  for (int v = 0; v + 1 < depth; ++v) {
    const MgnoLevelKernels& lk = levels[static_cast<std::size_t>(v)];
    smooth_in_place(st, lk.pre_a, lk.pre_b);
    Tensor resid = st.u_zero ? st.f : sub(st.f, conv2d_periodic(st.u, lk.pre_a.back(), 1));
    Tensor fc = conv2d_periodic(resid, lk.restrict_kernel, 2);
    stack.push_back(st);
    st = LevelState{fc, Tensor(), true};
  }
  smooth_in_place(st, levels.back().pre_a, levels.back().pre_b);
  Tensor uc = st.u_zero ? Tensor::zeros(st.f.shape()) : st.u;
  for (int v = depth - 2; v >= 0; --v) {
    const MgnoLevelKernels& lk = levels[static_cast<std::size_t>(v)];
    LevelState fine = stack.back();
    stack.pop_back();
    Tensor up = conv2d_transposed_periodic(uc, lk.prolong_kernel, 2);
    LevelState post{fine.f, fine.u_zero ? up : add(fine.u, up), false};
    smooth_in_place(post, lk.post_a, lk.post_b);
    uc = post.u;
  }
  return uc;
}

// ---- full operator -----------------------------------------------------------

namespace {

struct Layout {
  int lift_w, lift_b, head_w, head_b;
  struct Layer {
    int gamma_re = -1, gamma_im = -1;
    int alpha = -1, beta = -1;
    std::vector<MgnoLevelKernels> levels;  // filled with tensors per call
    struct LevelIdx {
      std::vector<std::pair<int, int>> pre, post;
      int restrict_k = -1, prolong_k = -1;
    };
    std::vector<LevelIdx> level_idx;
  };
  std::vector<Layer> layers;
};

Layout build_layout(const OperatorSpec& spec) {
  Layout lo;
  int i = 0;
  lo.lift_w = i++;
  lo.lift_b = i++;
  auto pattern = spec.effective_pattern();
  for (int l = 0; l < spec.layers; ++l) {
    Layout::Layer layer;
    if (spec.variant == OperatorVariant::Fno) {
      layer.gamma_re = i++;
      layer.gamma_im = i++;
    } else {
      for (int v = 0; v < spec.levels; ++v) {
        Layout::Layer::LevelIdx li;
        for (int s = 0; s < pattern[static_cast<std::size_t>(v)][0]; ++s) {
          li.pre.emplace_back(i, i + 1);
          i += 2;
        }
        if (v + 1 < spec.levels) {
          li.restrict_k = i++;
          li.prolong_k = i++;
          for (int s = 0; s < pattern[static_cast<std::size_t>(v)][1]; ++s) {
            li.post.emplace_back(i, i + 1);
            i += 2;
          }
        }
        layer.level_idx.push_back(std::move(li));
      }
    }
    layer.alpha = i++;
    layer.beta = i++;
    lo.layers.push_back(std::move(layer));
  }
  lo.head_w = i++;
  lo.head_b = i++;
  return lo;
}

const Layout& layout_cache(const OperatorSpec& spec) {
  thread_local std::vector<std::pair<std::string, Layout>> cache;
  std::string key = to_string(spec.variant) + "/" + std::to_string(spec.layers) + "/" +
                    std::to_string(spec.levels) + "/" + std::to_string(spec.width);
  auto pattern = spec.effective_pattern();
  for (const auto& e : pattern) key += "/" + std::to_string(e[0]) + "," + std::to_string(e[1]);
  for (auto& entry : cache)
    if (entry.first == key) return entry.second;
  cache.emplace_back(key, build_layout(spec));
  return cache.back().second;
}

std::vector<MgnoLevelKernels> level_views(const Layout::Layer& layer,
                                          std::span<const Tensor> params) {
  std::vector<MgnoLevelKernels> views;
  views.reserve(layer.level_idx.size());
  for (const auto& li : layer.level_idx) {
    MgnoLevelKernels lk;
    for (auto [ia, ib] : li.pre) {
      lk.pre_a.push_back(params[static_cast<std::size_t>(ia)]);
      lk.pre_b.push_back(params[static_cast<std::size_t>(ib)]);
    }
    for (auto [ia, ib] : li.post) {
      lk.post_a.push_back(params[static_cast<std::size_t>(ia)]);
      lk.post_b.push_back(params[static_cast<std::size_t>(ib)]);
    }
    if (li.restrict_k >= 0) {
      lk.restrict_kernel = params[static_cast<std::size_t>(li.restrict_k)];
      lk.prolong_kernel = params[static_cast<std::size_t>(li.prolong_k)];
    }
    views.push_back(std::move(lk));
  }
  return views;
}

}  // namespace

Tensor operator_forward(const NeuralOperator& op, std::span<const Tensor> params,
                        const Tensor& input) {
  const OperatorSpec& spec = op.spec();
  if (params.size() != op.parameters().size())
    throw ContractViolation("operator_forward: parameter span size mismatch");
  if (input.rank() != 3 || input.dim(0) != spec.in_channels)
    throw ShapeError("operator_forward: input channels do not match the spec");
  spec.check_grid(input.dim(1), input.dim(2));
  const Layout& lo = layout_cache(spec);

  Tensor g = channel_affine(input, params[static_cast<std::size_t>(lo.lift_w)],
                            params[static_cast<std::size_t>(lo.lift_b)]);
  for (const Layout::Layer& layer : lo.layers) {
    Tensor kout;
    if (spec.variant == OperatorVariant::Fno) {
      kout = spectral_conv(g, params[static_cast<std::size_t>(layer.gamma_re)],
                           params[static_cast<std::size_t>(layer.gamma_im)]);
    } else {
      std::vector<MgnoLevelKernels> lk = level_views(layer, params);
      kout = mgno_vcycle(g, lk);
    }
    Tensor bias = channel_affine(g, params[static_cast<std::size_t>(layer.alpha)],
                                 params[static_cast<std::size_t>(layer.beta)]);
    g = add(kout, bias);
    if (spec.activation == Activation::Gelu) g = activation(g);
  }
  return channel_affine(g, params[static_cast<std::size_t>(lo.head_w)],
                        params[static_cast<std::size_t>(lo.head_b)]);
}

Tensor operator_forward(const NeuralOperator& op, const Tensor& input) {
  std::vector<Tensor> raw;
  raw.reserve(op.parameters().size());
  for (const Parameter& p : op.parameters()) raw.push_back(p.value);
  return operator_forward(op, raw, input);
}

Tensor operator_input(const Tensor& state, const Tensor* forcing) {
  if (!forcing || forcing->empty()) return state;
  return concat_channels(state, *forcing);
}

std::vector<Tensor> autoregressive_unroll(
    const NeuralOperator& op, std::span<const Tensor> params, const Tensor& u0,
    const Tensor* forcing, double dt, int n_steps,
    const std::function<bool(int, const Tensor&)>& on_step) {
  if (n_steps < 0) throw ContractViolation("autoregressive_unroll: negative step count");
  std::vector<Tensor> states;
  states.reserve(static_cast<std::size_t>(n_steps) + 1);
  states.push_back(u0);
  for (int k = 0; k < n_steps; ++k) {
    Tensor rhs = operator_forward(op, params, operator_input(states.back(), forcing));
    Tensor next = add(states.back(), scale(rhs, dt));
    states.push_back(next);
    if (on_step && !on_step(k + 1, next)) break;
  }
  return states;
}

// ---- checkpoints --------------------------------------------------------------

std::string to_string(OperatorVariant v) { return v == OperatorVariant::Fno ? "fno" : "mgno"; }
std::string to_string(Activation a) { return a == Activation::Gelu ? "gelu" : "identity"; }

OperatorVariant variant_from_string(const std::string& s) {
  if (s == "fno") return OperatorVariant::Fno;
  if (s == "mgno") return OperatorVariant::Mgno;
  throw ContractViolation("unknown operator variant: " + s);
}

Activation activation_from_string(const std::string& s) {
  if (s == "gelu") return Activation::Gelu;
  if (s == "identity") return Activation::Identity;
  throw ContractViolation("unknown activation: " + s);
}

namespace {

json spec_to_json(const OperatorSpec& spec) {
  json j{{"variant", to_string(spec.variant)},
         {"layers", spec.layers},
         {"width", spec.width},
         {"activation", to_string(spec.activation)},
         {"in_channels", spec.in_channels},
         {"out_channels", spec.out_channels}};
  if (spec.variant == OperatorVariant::Fno) {
    j["modes"] = spec.modes;
  } else {
    j["levels"] = spec.levels;
    j["kernel_size"] = spec.kernel_size;
    j["pattern"] = spec.effective_pattern();
  }
  return j;
}

OperatorSpec spec_from_json(const json& j) {
  OperatorSpec spec;
  spec.variant = variant_from_string(j.at("variant").get<std::string>());
  spec.layers = j.at("layers").get<int>();
  spec.width = j.at("width").get<int>();
  spec.activation = activation_from_string(j.value("activation", std::string("gelu")));
  spec.in_channels = j.value("in_channels", 1);
  spec.out_channels = j.value("out_channels", 1);
  if (spec.variant == OperatorVariant::Fno) {
    spec.modes = j.at("modes").get<int>();
  } else {
    spec.levels = j.at("levels").get<int>();
    spec.kernel_size = j.value("kernel_size", 3);
    if (j.contains("pattern")) spec.pattern = j["pattern"].get<std::vector<std::array<int, 2>>>();
  }
  spec.validate();
  return spec;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NeuralOperator& op) {
  json header{{"format_version", 1}, {"kind", "rnolab-checkpoint"}, {"seed", op.seed()},
              {"spec", spec_to_json(op.spec())}};
  json params = json::array();
  std::int64_t offset = 0;
  for (const Parameter& p : op.parameters()) {
    params.push_back({{"name", p.name},
                      {"shape", p.value.shape()},
                      {"offset", offset},
                      {"count", p.value.size()}});
    offset += p.value.size() * static_cast<std::int64_t>(sizeof(double));
  }
  header["params"] = std::move(params);
  header["payload_bytes"] = offset;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open " + path.string());
  out << header.dump() << "\n";
  for (const Parameter& p : op.parameters())
    out.write(reinterpret_cast<const char*>(p.value.array().data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

NeuralOperator load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  json header = json::parse(line);
  if (header.value("kind", std::string()) != "rnolab-checkpoint")
    throw IoError("checkpoint: unrecognized header in " + path.string());
  NeuralOperator op;
  op.spec_ = spec_from_json(header.at("spec"));
  op.seed_ = header.value("seed", std::uint64_t{0});
  for (const json& pj : header.at("params")) {
    std::vector<Index> shape = pj.at("shape").get<std::vector<Index>>();
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.array_mut().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    op.params_.push_back({pj.at("name").get<std::string>(), std::move(t)});
  }
  if (!in) throw IoError("checkpoint: truncated payload in " + path.string());
  std::vector<ParamShape> expect = parameter_layout(op.spec_);
  if (expect.size() != op.params_.size())
    throw IoError("checkpoint: parameter list does not match the spec");
  for (std::size_t i = 0; i < expect.size(); ++i)
    if (expect[i].name != op.params_[i].name || expect[i].shape != op.params_[i].value.shape())
      throw IoError("checkpoint: parameter " + expect[i].name + " does not match the spec");
  return op;
}

}  // namespace rno
