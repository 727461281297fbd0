// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rno/pde.hpp"

#include <cmath>
#include <complex>
#include <fstream>

#include <json.hpp>

#include "rno/fft.hpp"
#include "rno/parallel.hpp"
#include "rno/rng.hpp"

namespace rno {

using nlohmann::json;
using CArray = Eigen::ArrayXcd;

std::string to_string(PdeKind k) {
  switch (k) {
    case PdeKind::Heat: return "heat";
    case PdeKind::AllenCahn: return "allen_cahn";
    case PdeKind::CahnHilliard: return "cahn_hilliard";
    case PdeKind::NavierStokes: return "navier_stokes";
  }
  return "?";
}

PdeKind pde_kind_from_string(const std::string& s) {
  if (s == "heat") return PdeKind::Heat;
  if (s == "allen_cahn") return PdeKind::AllenCahn;
  if (s == "cahn_hilliard") return PdeKind::CahnHilliard;
  if (s == "navier_stokes") return PdeKind::NavierStokes;
  throw ConfigError("problem.kind: unknown PDE '" + s + "'");
}

PdeProblem PdeProblem::defaults(PdeKind kind, int grid, double fine_dt) {
  PdeProblem p;
  p.kind = kind;
  p.grid = grid;
  p.fine_dt = fine_dt;
  switch (kind) {
    case PdeKind::Heat: p.alpha = 0.01; break;
    case PdeKind::AllenCahn: p.d1 = 1e-3; p.d2 = 1.0; break;
    case PdeKind::CahnHilliard: p.d1 = 1e-4; p.d2 = 1.0; break;
    case PdeKind::NavierStokes: p.nu = 1e-3; break;
  }
  return p;
}

void PdeProblem::validate() const {
  if (grid < 2) throw ConfigError("problem.grid must be >= 2");
  if (solver_grid != 0 && solver_grid < grid)
    throw ConfigError("problem.solver_grid must be >= problem.grid");
  if (fine_dt <= 0) throw ConfigError("problem.fine_dt must be > 0");
  switch (kind) {
    case PdeKind::Heat:
      if (alpha <= 0) throw ConfigError("problem.alpha must be > 0");
      break;
    case PdeKind::AllenCahn:
      if (d1 <= 0) throw ConfigError("problem.d1 must be > 0");
      break;
    case PdeKind::CahnHilliard:
      if (d1 <= 0) throw ConfigError("problem.d1 must be > 0");
      if (d2 <= 0) throw ConfigError("problem.d2 must be > 0");
      break;
    case PdeKind::NavierStokes:
      if (nu <= 0) throw ConfigError("problem.nu must be > 0");
      break;
  }
}

void to_json(json& j, const PdeProblem& p) {
  j = json{{"kind", to_string(p.kind)},       {"grid", p.grid},
           {"solver_grid", p.solver_grid},    {"fine_dt", p.fine_dt},
           {"forcing_amplitude", p.forcing_amplitude}};
  switch (p.kind) {
    case PdeKind::Heat: j["alpha"] = p.alpha; break;
    case PdeKind::AllenCahn:
    case PdeKind::CahnHilliard:
      j["d1"] = p.d1;
      j["d2"] = p.d2;
      break;
    case PdeKind::NavierStokes: j["nu"] = p.nu; break;
  }
}

void from_json(const json& j, PdeProblem& p) {
  PdeKind kind = pde_kind_from_string(j.at("kind").get<std::string>());
  p = PdeProblem::defaults(kind, j.at("grid").get<int>(), j.value("fine_dt", 0.01));
  p.solver_grid = j.value("solver_grid", 0);
  p.forcing_amplitude = j.value("forcing_amplitude", 0.1);
  if (j.contains("alpha")) p.alpha = j["alpha"].get<double>();
  if (j.contains("d1")) p.d1 = j["d1"].get<double>();
  if (j.contains("d2")) p.d2 = j["d2"].get<double>();
  if (j.contains("nu")) p.nu = j["nu"].get<double>();
}

// ---- spectral helpers ----------------------------------------------------------

namespace {

struct SpectralGrid {
  Index n;
  Array ksq;      // |2 pi k|^2 per mode
  Array kx, ky;   // derivative wavenumbers (Nyquist zeroed)
  Array dealias;  // 2/3-rule mask

  explicit SpectralGrid(Index n_) : n(n_) {
    if (!fft::is_power_of_two(n)) throw UnsupportedSizeError("solver: grid must be a power of two");
    ksq.resize(n * n);
    kx.resize(n * n);
    ky.resize(n * n);
    dealias.resize(n * n);
    Index cut = n / 3;
    for (Index i = 0; i < n; ++i) {
      double fi = static_cast<double>(i < n / 2 ? i : i - n);
      double kdi = (i == n / 2) ? 0.0 : 2.0 * M_PI * fi;
      for (Index j = 0; j < n; ++j) {
        double fj = static_cast<double>(j < n / 2 ? j : j - n);
        double kdj = (j == n / 2) ? 0.0 : 2.0 * M_PI * fj;
        Index p = i * n + j;
        ksq[p] = 4.0 * M_PI * M_PI * (fi * fi + fj * fj);
        kx[p] = kdi;
        ky[p] = kdj;
        dealias[p] = (std::abs(fi) > static_cast<double>(cut) ||
                      std::abs(fj) > static_cast<double>(cut))
                         ? 0.0
                         : 1.0;
      }
    }
  }
};

CArray to_spectrum(const Array& phys, Index n) {
  CArray s(n * n);
  for (Index i = 0; i < n * n; ++i) s[i] = {phys[i], 0.0};
  fft::transform2d(s.data(), n, n, -1);
  return s;
}

Array to_physical(const CArray& spec, Index n) {
  CArray s = spec;
  fft::transform2d(s.data(), n, n, 1);
  return s.real() / static_cast<double>(n * n);
}

void check_state(const Array& u, int step, const char* what) {
  if (!u.isFinite().all() || u.abs().maxCoeff() > 10.0)
    throw BlowupError(std::string(what) + ": solution left the finite range at step " +
                          std::to_string(step),
                      step);
}

Array field_of(const Tensor& t, Index n, const char* what) {
  if (t.rank() != 3 || t.dim(0) != 1 || t.dim(1) != n || t.dim(2) != n)
    throw ShapeError(std::string(what) + ": [1,N,N] field required");
  return t.array();
}

std::vector<Tensor> run_stepper(const Array& u0, Index n, int n_steps, int store_every,
                                const std::function<Array(int)>& step_to) {
  if (n_steps < 0) throw ContractViolation("solver: negative step count");
  if (store_every < 1) throw ContractViolation("solver: store_every must being >= 1");
  std::vector<Tensor> frames;
  frames.push_back(Tensor({1, n, n}, u0));
  for (int s = store_every; s <= n_steps; s += store_every)
    frames.push_back(Tensor({1, n, n}, step_to(s)));
  return frames;
}

}  // namespace

// ---- Gaussian-process initial conditions ---------------------------------------

namespace {

constexpr Index kGpBaseGrid = 64;

class GpSampler {
 public:
  GpSampler(Index h, Index w, double length_scale, double jitter)
      : h_(h), w_(w), base_h_(std::min(h, kGpBaseGrid)), base_w_(std::min(w, kGpBaseGrid)) {
    if (length_scale <= 0) throw ConfigError("gp.length_scale must be > 0");
    if (jitter < 0) throw ConfigError("gp.jitter must be >= 0");
    Index m = base_h_ * base_w_;
    Eigen::MatrixXd cov(m, m);
    Eigen::MatrixXd ex(base_h_, base_h_), ey(base_w_, base_w_);
    double inv = 1.0 / (2.0 * length_scale * length_scale);
    for (Index i = 0; i < base_h_; ++i)
      for (Index k = 0; k < base_h_; ++k) {
        double s = std::sin(M_PI * static_cast<double>(i - k) / static_cast<double>(base_h_));
        ex(i, k) = std::exp(-s * s * inv);
      }
    for (Index j = 0; j < base_w_; ++j)
      for (Index k = 0; k < base_w_; ++k) {
        double s = std::sin(M_PI * static_cast<double>(j - k) / static_cast<double>(base_w_));
        ey(j, k) = std::exp(-s * s * inv);
      }
    for (Index p = 0; p < m; ++p)
      for (Index q = 0; q < m; ++q)
        cov(p, q) = ex(p / base_w_, q / base_w_) * ey(p % base_w_, q % base_w_);
    cov.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw NumericalError("gp: Cholesky factorization failed (grid " + std::to_string(base_h_) +
                           "x" + std::to_string(base_w_) + ", jitter " + std::to_string(jitter) +
                           ")");
    chol_ = llt.matrixL();
  }

  Tensor sample(std::uint64_t seed) const {
    Index m = base_h_ * base_w_;
    Rng rng(seed);
    Eigen::VectorXd z(m);
    for (Index i = 0; i < m; ++i) z[i] = rng.normal();
    Eigen::VectorXd field = chol_ * z;
    Array base = field.array();
    if (base_h_ == h_ && base_w_ == w_) return Tensor({1, h_, w_}, std::move(base));
    return Tensor({1, h_, w_}, upsample(base));
  }

 private:
  // Zero-padded spectral interpolation from the base grid; the base
  // Nyquist row/column is dropped so the embedded spectrum stays Hermitian.
  Array upsample(const Array& base) const {
    CArray s = to_spectrum(base, base_h_);  // base grids are square here
    CArray t = CArray::Zero(h_ * w_);
    double scalef = static_cast<double>(h_ * w_) / static_cast<double>(base_h_ * base_w_);
    for (Index i = 0; i < base_h_; ++i) {
      Index fi = i < base_h_ / 2 ? i : i - base_h_;
      if (std::abs(fi) == base_h_ / 2) continue;
      Index ti = (fi + h_) % h_;
      for (Index j = 0; j < base_w_; ++j) {
        Index fj = j < base_w_ / 2 ? j : j - base_w_;
        if (std::abs(fj) == base_w_ / 2) continue;
        Index tj = (fj + w_) % w_;
        t[ti * w_ + tj] = s[i * base_w_ + j] * scalef;
      }
    }
    return to_physical(t, h_);
  }

  Index h_, w_, base_h_, base_w_;
  Eigen::MatrixXd chol_;
};

}  // namespace

Tensor sample_gp_initial(Index h, Index w, double length_scale, double jitter,
                         std::uint64_t seed) {
  if (h > kGpBaseGrid && h != w)
    throw UnsupportedSizeError("gp: upsampled grids must be square");
  GpSampler sampler(h, w, length_scale, jitter);
  return sampler.sample(seed);
}

// ---- solvers --------------------------------------------------------------------

std::vector<Tensor> solve_heat(const PdeProblem& p, const Tensor& u0, const Tensor& forcing,
                               int n_steps, int store_every) {
  Index n = p.solve_grid();
  Array u = field_of(u0, n, "heat");
  SpectralGrid sg(n);
  double dt = p.fine_dt;
  CArray uh = to_spectrum(u, n);
  CArray fh = forcing.empty() ? CArray(CArray::Zero(n * n))
                              : to_spectrum(field_of(forcing, n, "heat forcing"), n);
  Array decay = (-p.alpha * dt * sg.ksq).exp();
  Array gain(n * n);
  gain[0] = dt;
  for (Index i = 1; i < n * n; ++i) gain[i] = (1.0 - decay[i]) / (p.alpha * sg.ksq[i]);
  int done = 0;
  return run_stepper(u, n, n_steps, store_every, [&](int target) {
    for (; done < target; ++done) uh = decay * uh + gain * fh;
    return to_physical(uh, n);
  });
}

std::vector<Tensor> solve_allen_cahn(const PdeProblem& p, const Tensor& u0, int n_steps,
                                     int store_every) {
  Index n = p.solve_grid();
  Array u = field_of(u0, n, "allen-cahn");
  SpectralGrid sg(n);
  double dt = p.fine_dt;
  Array denom = 1.0 + dt * p.d1 * sg.ksq;
  CArray uh = to_spectrum(u, n);
  int done = 0;
  return run_stepper(u, n, n_steps, store_every, [&](int target) {
    for (; done < target; ++done) {
      Array reaction = p.d2 * u * (1.0 - u * u);
      CArray rh = to_spectrum(reaction, n);
      uh = (uh + dt * rh) / denom;
      u = to_physical(uh, n);
      check_state(u, done + 1, "allen-cahn");
    }
    return u;
  });
}

std::vector<Tensor> solve_cahn_hilliard(const PdeProblem& p, const Tensor& u0, int n_steps,
                                        int store_every) {
  Index n = p.solve_grid();
  Array u = field_of(u0, n, "cahn-hilliard");
  SpectralGrid sg(n);
  double dt = p.fine_dt;
  Array denom = 1.0 + dt * p.d1 * sg.ksq * sg.ksq;
  CArray uh = to_spectrum(u, n);
  int done = 0;
  return run_stepper(u, n, n_steps, store_every, [&](int target) {
    for (; done < target; ++done) {
      Array reaction = p.d2 * (u * u * u - u);
      CArray rh = to_spectrum(reaction, n);
      uh = (uh - dt * sg.ksq * rh) / denom;
      u = to_physical(uh, n);
      check_state(u, done + 1, "cahn-hilliard");
    }
    return u;
  });
}

namespace {

// Velocity spectra via the streamfunction psi_hat = w_hat / |k|^2.
void biot_savart(const CArray& wh, const SpectralGrid& sg, CArray& uxh, CArray& uyh) {
  Index m = wh.size();
  uxh.resize(m);
  uyh.resize(m);
  const std::complex<double> iunit(0.0, 1.0);
  uxh[0] = uyh[0] = 0.0;
  for (Index p = 1; p < m; ++p) {
    std::complex<double> psi = wh[p] / sg.ksq[p];
    uxh[p] = iunit * sg.ky[p] * psi;
    uyh[p] = -iunit * sg.kx[p] * psi;
  }
}

}  // namespace

std::vector<Tensor> solve_navier_stokes(const PdeProblem& p, const Tensor& w0,
                                        const Tensor& forcing, int n_steps, int store_every) {
  Index n = p.solve_grid();
  Array w = field_of(w0, n, "navier-stokes");
  w -= w.mean();  // vorticity must have zero mean on the torus
  SpectralGrid sg(n);
  double dt = p.fine_dt;
  Array denom = 1.0 + dt * p.nu * sg.ksq;
  CArray wh = to_spectrum(w, n);
  CArray fh = forcing.empty() ? CArray(CArray::Zero(n * n))
                              : to_spectrum(field_of(forcing, n, "ns forcing"), n);
  const std::complex<double> iunit(0.0, 1.0);
  CArray uxh, uyh;
  int done = 0;
  return run_stepper(w, n, n_steps, store_every, [&](int target) {
    for (; done < target; ++done) {
      biot_savart(wh, sg, uxh, uyh);
      Array ux = to_physical(uxh, n);
      Array uy = to_physical(uyh, n);
      Array wx = to_physical(CArray(iunit * sg.kx * wh), n);
      Array wy = to_physical(CArray(iunit * sg.ky * wh), n);
      Array adv = ux * wx + uy * wy;
      CArray advh = to_spectrum(adv, n);
      advh *= sg.dealias;
      wh = (wh + dt * (fh - advh)) / denom;
      w = to_physical(wh, n);
      check_state(w, done + 1, "navier-stokes");
    }
    return w;
  });
}

std::vector<Tensor> solve(const PdeProblem& p, const Tensor& u0, const Tensor& forcing,
                          int n_steps, int store_every) {
  switch (p.kind) {
    case PdeKind::Heat: return solve_heat(p, u0, forcing, n_steps, store_every);
    case PdeKind::AllenCahn: return solve_allen_cahn(p, u0, n_steps, store_every);
    case PdeKind::CahnHilliard: return solve_cahn_hilliard(p, u0, n_steps, store_every);
    case PdeKind::NavierStokes:
      return solve_navier_stokes(p, u0, forcing, n_steps, store_every);
  }
  throw ContractViolation("solve: unknown PDE kind");
}

double ns_velocity_divergence(const Tensor& w) {
  Index n = w.dim(1);
  SpectralGrid sg(n);
  CArray wh = to_spectrum(w.array(), n);
  CArray uxh, uyh;
  biot_savart(wh, sg, uxh, uyh);
  const std::complex<double> iunit(0.0, 1.0);
  double worst = 0.0;
  double scale = static_cast<double>(n * n);
  for (Index p = 0; p < n * n; ++p)
    worst = std::max(worst, std::abs(iunit * sg.kx[p] * uxh[p] + iunit * sg.ky[p] * uyh[p]) / scale);
  return worst;
}

Tensor make_forcing(const PdeProblem& p, Index n, std::uint64_t seed, const GpConfig& gp) {
  if (p.kind == PdeKind::NavierStokes) {
    Tensor f({1, n, n});
    Array& a = f.array_mut();
    for (Index i = 0; i < n; ++i) {
      double x = static_cast<double>(i) / static_cast<double>(n);
      for (Index j = 0; j < n; ++j) {
        double y = static_cast<double>(j) / static_cast<double>(n);
        double s = 2.0 * M_PI * (x + y);
        a[i * n + j] = p.forcing_amplitude * (std::sin(s) + std::cos(s));
      }
    }
    return f;
  }
  if (p.kind == PdeKind::Heat) {
    Tensor f = sample_gp_initial(n, n, gp.length_scale, gp.jitter, seed);
    Tensor scaled({1, n, n}, f.array() * p.forcing_amplitude);
    return scaled;
  }
  return Tensor();
}

// ---- dataset generation -----------------------------------------------------------

Tensor TrajectoryDataset::frame(Index s, Index t) const {
  if (s < 0 || s >= samples || t < 0 || t >= frames)
    throw ShapeError("dataset: frame index out of range");
  Index plane = channels * height * width;
  return Tensor({channels, height, width}, data.segment(frame_offset(s, t), plane));
}

namespace {

Array downsample_point(const Array& fine, Index nf, Index nt) {
  if (nf == nt) return fine;
  Index ratio = nf / nt;
  Array out(nt * nt);
  for (Index i = 0; i < nt; ++i)
    for (Index j = 0; j < nt; ++j) out[i * nt + j] = fine[(i * ratio) * nf + j * ratio];
  return out;
}

}  // namespace

TrajectoryDataset generate_dataset(const PdeProblem& problem, int n_samples, double horizon,
                                   int store_stride, std::uint64_t seed, const GpConfig& gp,
                                   int threads) {
  problem.validate();
  if (n_samples < 0) throw ConfigError("dataset.samples must be >= 0");
  if (store_stride < 1) throw ConfigError("dataset.store_stride must be >= 1");
  if (horizon <= 0) throw ConfigError("dataset.horizon must be > 0");
  Index nsolve = problem.solve_grid();
  Index ntarget = problem.grid;
  if (nsolve % ntarget != 0)
    throw ConfigError("problem.solver_grid must be a multiple of problem.grid");

  int total_steps = static_cast<int>(std::llround(horizon / problem.fine_dt));
  int frames = total_steps / store_stride + 1;
  int n_solve = (frames - 1) * store_stride;

  TrajectoryDataset ds;
  ds.problem = problem;
  ds.dt = problem.fine_dt * store_stride;
  ds.store_stride = store_stride;
  ds.samples = n_samples;
  ds.frames = frames;
  ds.channels = 1;
  ds.height = ntarget;
  ds.width = ntarget;
  ds.seed = seed;
  ds.gp = gp;
  ds.data = Array::Zero(static_cast<Index>(n_samples) * frames * ntarget * ntarget);

  Tensor forcing_solve;
  if (problem.has_forcing()) {
    forcing_solve = make_forcing(problem, nsolve, derive_seed(seed, "forcing"), gp);
    ds.forcing =
        Tensor({1, ntarget, ntarget}, downsample_point(forcing_solve.array(), nsolve, ntarget));
  }

  ds.sample_seeds.resize(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s)
    ds.sample_seeds[static_cast<std::size_t>(s)] = derive_seed(seed, "sample", s);

  if (n_samples == 0) return ds;

  GpSampler sampler(nsolve, nsolve, gp.length_scale, gp.jitter);
  parallel_for(n_samples, threads, [&](Index s) {
    Tensor u0 = sampler.sample(ds.sample_seeds[static_cast<std::size_t>(s)]);
    std::vector<Tensor> traj;
    try {
      traj = solve(problem, u0, forcing_solve, n_solve, store_stride);
    } catch (const BlowupError& e) {
      throw BlowupError(std::string(e.what()) + " (sample " + std::to_string(s) + ")", e.step,
                        static_cast<int>(s));
    }
    for (Index t = 0; t < frames; ++t)
      ds.data.segment(ds.frame_offset(s, t), ntarget * ntarget) =
          downsample_point(traj[static_cast<std::size_t>(t)].array(), nsolve, ntarget);
  });
  return ds;
}

// ---- container I/O ------------------------------------------------------------------

void save_dataset(const std::filesystem::path& base, const TrajectoryDataset& ds) {
  std::filesystem::path stem = base;
  if (stem.extension() == ".json" || stem.extension() == ".bin") stem.replace_extension();
  std::filesystem::path json_path = stem;
  json_path += ".json";
  std::filesystem::path bin_path = stem;
  bin_path += ".bin";

  json j{{"kind", "rnolab-dataset"},
         {"format_version", 1},
         {"problem", ds.problem},
         {"samples", ds.samples},
         {"frames", ds.frames},
         {"channels", ds.channels},
         {"height", ds.height},
         {"width", ds.width},
         {"dt", ds.dt},
         {"store_stride", ds.store_stride},
         {"horizon", ds.stored_horizon()},
         {"seed", ds.seed},
         {"sample_seeds", ds.sample_seeds},
         {"gp", {{"length_scale", ds.gp.length_scale}, {"jitter", ds.gp.jitter}}},
         {"has_forcing", !ds.forcing.empty()}};
  j["payload"] = json{{"file", bin_path.filename().string()},
                      {"dtype", "float64-le"},
                      {"order", "[sample,time,channel,row,col]"},
                      {"trajectory_count", ds.data.size()},
                      {"forcing_count", ds.forcing.empty() ? 0 : ds.forcing.size()}};

  std::ofstream js(json_path);
  if (!js) throw IoError("dataset: cannot open " + json_path.string());
  js << j.dump(2) << "\n";
  std::ofstream bs(bin_path, std::ios::binary);
  if (!bs) throw IoError("dataset: cannot open " + bin_path.string());
  bs.write(reinterpret_cast<const char*>(ds.data.data()),
           static_cast<std::streamsize>(ds.data.size() * sizeof(double)));
  if (!ds.forcing.empty())
    bs.write(reinterpret_cast<const char*>(ds.forcing.array().data()),
             static_cast<std::streamsize>(ds.forcing.size() * sizeof(double)));
  if (!js || !bs) throw IoError("dataset: write failed for " + stem.string());
}

TrajectoryDataset load_dataset(const std::filesystem::path& json_path) {
  std::ifstream js(json_path);
  if (!js) throw IoError("dataset: cannot open " + json_path.string());
  json j = json::parse(js, nullptr, true);
  if (j.value("kind", std::string()) != "rnolab-dataset")
    throw IoError("dataset: unrecognized sidecar " + json_path.string());

  TrajectoryDataset ds;
  ds.problem = j.at("problem").get<PdeProblem>();
  ds.samples = j.at("samples").get<Index>();
  ds.frames = j.at("frames").get<Index>();
  ds.channels = j.at("channels").get<Index>();
  ds.height = j.at("height").get<Index>();
  ds.width = j.at("width").get<Index>();
  ds.dt = j.at("dt").get<double>();
  ds.store_stride = j.value("store_stride", 1);
  ds.seed = j.at("seed").get<std::uint64_t>();
  ds.sample_seeds = j.at("sample_seeds").get<std::vector<std::uint64_t>>();
  ds.gp.length_scale = j.at("gp").at("length_scale").get<double>();
  ds.gp.jitter = j.at("gp").at("jitter").get<double>();

  const json& payload = j.at("payload");
  std::filesystem::path bin_path = json_path.parent_path() / payload.at("file").get<std::string>();
  Index traj_count = payload.at("trajectory_count").get<Index>();
  Index forcing_count = payload.at("forcing_count").get<Index>();
  std::ifstream bs(bin_path, std::ios::binary);
  if (!bs) throw IoError("dataset: cannot open " + bin_path.string());
  ds.data.resize(traj_count);
  bs.read(reinterpret_cast<char*>(ds.data.data()),
          static_cast<std::streamsize>(traj_count * sizeof(double)));
  if (forcing_count > 0) {
    Tensor f({1, ds.height, ds.width});
    if (f.size() != forcing_count) throw IoError("dataset: forcing size mismatch");
    bs.read(reinterpret_cast<char*>(f.array_mut().data()),
            static_cast<std::streamsize>(forcing_count * sizeof(double)));
    ds.forcing = f;
  }
  if (!bs) throw IoError("dataset: truncated payload " + bin_path.string());
  return ds;
}

}  // namespace rno
