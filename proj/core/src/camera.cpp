#include "gp3/camera.hpp"

#include <cmath>

namespace gp3 {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPenaltyCap = 1e6;
constexpr double kPoleClamp = 1e-3;

Tensor make_const_vec(const std::vector<double>& v) {
  return Tensor::from({static_cast<int>(v.size())}, v);
}

}  // namespace

CameraPrior CameraPrior::wide_default() {
  CameraPrior p;
  p.spec[CameraParams::kPosYaw].range = {-kPi, kPi};
  p.spec[CameraParams::kPosPitch].range = {kPi / 2 - 0.8, kPi / 2 + 0.8};
  p.spec[CameraParams::kFov].range = {0.2, 1.2};
  p.spec[CameraParams::kLookYaw].range = {-kPi, kPi};
  p.spec[CameraParams::kLookPitch].range = {kPoleClamp, kPi - kPoleClamp};
  p.spec[CameraParams::kLookRadius].range = {0.0, 0.3};
  return p;
}

void CameraPrior::validate() const {
  for (int i = 0; i < CameraParams::kDim; ++i) {
    if (!(spec[i].range.lo < spec[i].range.hi))
      throw Error("CameraPrior: empty range for parameter " +
                  std::to_string(i));
    if (spec[i].family == PriorFamily::kTruncGauss && spec[i].stddev <= 0)
      throw Error("CameraPrior: non-positive stddev for parameter " +
                  std::to_string(i));
  }
}

CameraParams CameraPrior::sample(Rng& rng) const {
  CameraParams out;
  for (int i = 0; i < CameraParams::kDim; ++i) {
    const PriorSpec& s = spec[i];
    if (s.family == PriorFamily::kUniform) {
      out.v[i] = rng.uniform(s.range.lo, s.range.hi);
    } else {
      double x = rng.normal(s.mean, s.stddev);
      out.v[i] = std::clamp(x, s.range.lo, s.range.hi);
    }
  }
  return out;
}

CameraParams CameraPrior::mean_camera() const {
  CameraParams out;
  for (int i = 0; i < CameraParams::kDim; ++i) {
    const PriorSpec& s = spec[i];
    out.v[i] = s.family == PriorFamily::kUniform
                   ? 0.5 * (s.range.lo + s.range.hi)
                   : std::clamp(s.mean, s.range.lo, s.range.hi);
  }
  return out;
}

CameraGenerator::CameraGenerator(const CameraPrior& prior, int z_dim,
                                 int n_classes, int hidden, Rng& rng)
    : prior_(prior), z_dim_(z_dim), n_classes_(n_classes) {
  prior_.validate();
  const auto make_head = [&](int in, int out) {
    return std::array<Linear, 3>{Linear::create(in, hidden, rng),
                                 Linear::create(hidden, hidden, rng),
                                 Linear::create(hidden, out, rng)};
  };
  pos_head_ = make_head(2 + n_classes, 2);
  fov_head_ = make_head(1 + z_dim, 1);
  look_head_ = make_head(3 + z_dim, 3);
}

namespace {

Tensor head_forward(const std::array<Linear, 3>& head, const Tensor& x2d) {
  Tensor h = softplus(head[0].forward(x2d));
  h = softplus(head[1].forward(h));
  return head[2].forward(h);
}

// raw (N,k) -> per-column sigmoid into [lo_i, hi_i), columns mapped to
// parameter indices param_idx[0..k).
Tensor squash_to_range(const Tensor& raw, const CameraPrior& prior,
                       const std::vector<int>& param_idx) {
  Tensor s = sigmoid(raw);
  // scale+offset per column
  const int n = s.dim(0), k = s.dim(1);
  std::vector<double> sc(k), off(k);
  for (int j = 0; j < k; ++j) {
    sc[j] = prior.range_hi(param_idx[j]) - prior.range_lo(param_idx[j]);
    off[j] = prior.range_lo(param_idx[j]);
  }
  std::vector<double> scale_row(sc), off_row(off);
  Tensor scale_mat = Tensor::from({k}, scale_row);
  Tensor off_mat = Tensor::from({k}, off_row);
  // (N,k) * rowvec + rowvec
  Tensor scaled = add_rowvec(
      mul(s, reshape(matmul(Tensor::full({n, 1}, 1.0),
                            reshape(scale_mat, {1, k})),
                     {n, k})),
      off_mat);
  return scaled;
}

}  // namespace

Tensor CameraGenerator::forward(const Tensor& phi_prime, const Tensor& z,
                                int c) const {
  if (phi_prime.size() != CameraParams::kDim)
    throw Error("CameraGenerator: phi_prime must have 6 components");
  for (double v : phi_prime.values())
    if (!std::isfinite(v)) throw Error("CameraGenerator: non-finite phi_prime");
  for (double v : z.values())
    if (!std::isfinite(v)) throw Error("CameraGenerator: non-finite z");
  if (c < 0 || c >= n_classes_)
    throw Error("CameraGenerator: class index out of range");

  Tensor onehot = Tensor::zeros({n_classes_});
  onehot.mutable_values()[c] = 1.0;

  Tensor pos_in = reshape(
      concat(stack_scalars({at(phi_prime, CameraParams::kPosYaw),
                            at(phi_prime, CameraParams::kPosPitch)}),
             onehot),
      {1, 2 + n_classes_});
  Tensor fov_in = reshape(
      concat(stack_scalars({at(phi_prime, CameraParams::kFov)}), z),
      {1, 1 + z_dim_});
  Tensor look_in = reshape(
      concat(stack_scalars({at(phi_prime, CameraParams::kLookYaw),
                            at(phi_prime, CameraParams::kLookPitch),
                            at(phi_prime, CameraParams::kLookRadius)}),
             z),
      {1, 3 + z_dim_});

  Tensor pos = squash_to_range(head_forward(pos_head_, pos_in), prior_,
                               {CameraParams::kPosYaw, CameraParams::kPosPitch});
  Tensor fov = squash_to_range(head_forward(fov_head_, fov_in), prior_,
                               {CameraParams::kFov});
  Tensor look = squash_to_range(
      head_forward(look_head_, look_in), prior_,
      {CameraParams::kLookYaw, CameraParams::kLookPitch,
       CameraParams::kLookRadius});

  return concat(concat(reshape(pos, {2}), reshape(fov, {1})),
                reshape(look, {3}));
}

CameraParams CameraGenerator::forward_params(const CameraParams& phi_prime,
                                             const std::vector<double>& z,
                                             int c) const {
  Tensor pp = Tensor::from({CameraParams::kDim},
                           {phi_prime.v.begin(), phi_prime.v.end()});
  Tensor zt = make_const_vec(z);
  Tensor phi = forward(pp, zt, c);
  CameraParams out;
  for (int i = 0; i < CameraParams::kDim; ++i) out.v[i] = phi.values()[i];
  return out;
}

void CameraGenerator::collect(ParamMap& pm, const std::string& prefix) const {
  for (int i = 0; i < 3; ++i) {
    pos_head_[i].collect(pm, prefix + ".pos.l" + std::to_string(i));
    fov_head_[i].collect(pm, prefix + ".fov.l" + std::to_string(i));
    look_head_[i].collect(pm, prefix + ".look.l" + std::to_string(i));
  }
}

namespace {

std::array<double, CameraParams::kDim> diagonal_derivatives(
    const std::function<Tensor(const Tensor&)>& fn, const Tensor& phi_prime) {
  Tensor x = phi_prime.detach();
  x.set_requires_grad(true);
  Tensor phi = fn(x);
  if (phi.size() != CameraParams::kDim)
    throw Error("camera penalty: fn must produce 6 components");
  std::array<double, CameraParams::kDim> diag{};
  for (int i = 0; i < CameraParams::kDim; ++i) {
    x.zero_grad();
    at(phi, i).backward();
    diag[i] = x.grad()[i];
  }
  return diag;
}

double penalty_of_slope(double g, bool* collapsed) {
  const double a = std::abs(g);
  if (a == 0.0) {
    *collapsed = true;
    return kPenaltyCap;
  }
  return std::min(a + 1.0 / a, kPenaltyCap);
}

}  // namespace

CameraPenalty camera_gradient_penalty(
    const std::function<Tensor(const Tensor&)>& fn, const Tensor& phi_prime) {
  const auto diag = diagonal_derivatives(fn, phi_prime);
  CameraPenalty out;
  for (int i = 0; i < CameraParams::kDim; ++i)
    out.loss[i] = penalty_of_slope(diag[i], &out.collapsed);
  return out;
}

CameraPenalty camera_gradient_penalty(const CameraGenerator& gen,
                                      const std::vector<Tensor>& phi_primes,
                                      const std::vector<Tensor>& zs,
                                      const std::vector<int>& cs) {
  if (phi_primes.empty()) throw Error("camera penalty: empty batch");
  // Freeze the generator so the probe backwards stay off its parameter grads.
  ParamMap pm;
  gen.collect(pm, "c");
  ParamFreeze freeze(pm);
  CameraPenalty out;
  for (size_t b = 0; b < phi_primes.size(); ++b) {
    const Tensor& z = zs[b];
    const int c = cs[b];
    auto fn = [&gen, &z, c](const Tensor& pp) { return gen.forward(pp, z, c); };
    CameraPenalty p = camera_gradient_penalty(fn, phi_primes[b]);
    for (int i = 0; i < CameraParams::kDim; ++i) out.loss[i] += p.loss[i];
    out.collapsed = out.collapsed || p.collapsed;
  }
  for (auto& l : out.loss) l /= static_cast<double>(phi_primes.size());
  return out;
}

Tensor camera_penalty_surrogate(const CameraGenerator& gen,
                                const std::vector<Tensor>& phi_primes,
                                const std::vector<Tensor>& zs,
                                const std::vector<int>& cs,
                                const std::array<double, 6>& weights,
                                double fd_step) {
  Tensor total = Tensor::scalar(0.0);
  const double inv2e = 1.0 / (2.0 * fd_step);
  for (size_t b = 0; b < phi_primes.size(); ++b) {
    const Tensor& z = zs[b];
    const int c = cs[b];
    auto fn = [&gen, &z, c](const Tensor& pp) { return gen.forward(pp, z, c); };
    std::array<double, CameraParams::kDim> diag;
    {
      ParamMap pm;
      gen.collect(pm, "c");
      ParamFreeze freeze(pm);
      diag = diagonal_derivatives(fn, phi_primes[b]);
    }
    for (int i = 0; i < CameraParams::kDim; ++i) {
      const double g = diag[i];
      if (g == 0.0 || std::abs(g) + 1.0 / std::abs(g) >= kPenaltyCap) continue;
      // dL/dg at the detached slope; the FD pair keeps the parameter path.
      const double coef =
          weights[i] * (g > 0 ? 1.0 : -1.0) * (1.0 - 1.0 / (g * g));
      if (coef == 0.0) continue;
      Tensor pp_plus = phi_primes[b].detach();
      pp_plus.mutable_values()[i] += fd_step;
      Tensor pp_minus = phi_primes[b].detach();
      pp_minus.mutable_values()[i] -= fd_step;
      Tensor fd = mul(sub(at(gen.forward(pp_plus, z, c), i),
                          at(gen.forward(pp_minus, z, c), i)),
                      inv2e);
      total = add(total, mul(fd, coef));
    }
  }
  return mul(total, 1.0 / static_cast<double>(phi_primes.size()));
}

std::array<Tensor, CameraParams::kDim> emd_entropy_reg(
    const CameraGenerator& gen, const CameraPrior& prior,
    const std::vector<Tensor>& zs, const std::vector<int>& cs, Rng& rng,
    int n_samples) {
  if (n_samples < 2) throw Error("emd_entropy_reg: need at least 2 samples");
  if (zs.empty()) throw Error("emd_entropy_reg: empty z batch");
  std::vector<Tensor> rows;
  rows.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    CameraParams pp = prior.sample(rng);
    Tensor ppt =
        Tensor::from({CameraParams::kDim}, {pp.v.begin(), pp.v.end()});
    rows.push_back(
        gen.forward(ppt, zs[k % zs.size()], cs[k % cs.size()]));
  }
  Tensor mat = stack_rows(rows);  // (n, 6)
  std::array<Tensor, CameraParams::kDim> out;
  for (int i = 0; i < CameraParams::kDim; ++i)
    out[i] = emd_to_uniform(col(mat, i), prior.range_lo(i), prior.range_hi(i));
  return out;
}

namespace {

std::array<double, 3> sph_point(double yaw, double pitch, double r) {
  return {r * std::sin(pitch) * std::cos(yaw),
          r * std::sin(pitch) * std::sin(yaw), r * std::cos(pitch)};
}

}  // namespace

View build_view(const CameraParams& phi, double r_outer) {
  const double pitch =
      std::clamp(phi.pos_pitch(), kPoleClamp, kPi - kPoleClamp);
  View v;
  v.origin = sph_point(phi.pos_yaw(), pitch, r_outer);
  v.lookat = sph_point(phi.lookat_yaw(), phi.lookat_pitch(),
                       phi.lookat_radius());
  std::array<double, 3> f{};
  double n2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    f[i] = v.lookat[i] - v.origin[i];
    n2 += f[i] * f[i];
  }
  if (n2 < 1e-18)
    throw Error("build_view: camera origin coincides with look-at point");
  const double n = std::sqrt(n2);
  for (auto& x : f) x /= n;
  v.forward = f;
  // right = normalize(world_up x forward), world_up = +z
  std::array<double, 3> r{-f[1], f[0], 0.0};
  const double rn = std::sqrt(r[0] * r[0] + r[1] * r[1] + 1e-12);
  r[0] /= rn;
  r[1] /= rn;
  v.right = r;
  // up = forward x right
  v.up = {f[1] * r[2] - f[2] * r[1], f[2] * r[0] - f[0] * r[2],
          f[0] * r[1] - f[1] * r[0]};
  return v;
}

ViewT build_view_t(const Tensor& phi, double r_outer) {
  // Clamp pitch away from the poles; outside [eps, pi-eps] the clamp is
  // constant so its derivative is zero, matching the numeric path.
  Tensor pos_pitch = at(phi, CameraParams::kPosPitch);
  {
    const double p = pos_pitch.values()[0];
    if (p < kPoleClamp || p > kPi - kPoleClamp)
      pos_pitch = Tensor::scalar(std::clamp(p, kPoleClamp, kPi - kPoleClamp));
  }
  Tensor pos_yaw = at(phi, CameraParams::kPosYaw);
  Tensor lyaw = at(phi, CameraParams::kLookYaw);
  Tensor lpitch = at(phi, CameraParams::kLookPitch);
  Tensor lrad = at(phi, CameraParams::kLookRadius);

  Tensor sp = sin(pos_pitch), cp = cos(pos_pitch);
  Tensor sy = sin(pos_yaw), cy = cos(pos_yaw);
  Tensor ox = mul(mul(sp, cy), r_outer);
  Tensor oy = mul(mul(sp, sy), r_outer);
  Tensor oz = mul(cp, r_outer);

  Tensor lsp = sin(lpitch), lcp = cos(lpitch);
  Tensor lsy = sin(lyaw), lcy = cos(lyaw);
  Tensor lx = mul(mul(lsp, lcy), lrad);
  Tensor ly = mul(mul(lsp, lsy), lrad);
  Tensor lz = mul(lcp, lrad);

  Tensor fx = sub(lx, ox), fy = sub(ly, oy), fz = sub(lz, oz);
  Tensor fn2 = add(add(square(fx), square(fy)), square(fz));
  if (fn2.values()[0] < 1e-18)
    throw Error("build_view_t: camera origin coincides with look-at point");
  Tensor fnorm = sqrt(fn2);
  fx = div(fx, fnorm);
  fy = div(fy, fnorm);
  fz = div(fz, fnorm);

  Tensor rx = neg(fy), ry = fx;
  Tensor rnorm = sqrt(add(add(square(rx), square(ry)), 1e-12));
  rx = div(rx, rnorm);
  ry = div(ry, rnorm);
  Tensor rz = Tensor::scalar(0.0);

  // up = forward x right
  Tensor ux = sub(mul(fy, rz), mul(fz, ry));
  Tensor uy = sub(mul(fz, rx), mul(fx, rz));
  Tensor uz = sub(mul(fx, ry), mul(fy, rx));

  ViewT out;
  out.origin = stack_scalars({ox, oy, oz});
  out.right = stack_scalars({rx, ry, rz});
  out.up = stack_scalars({ux, uy, uz});
  out.forward = stack_scalars({fx, fy, fz});
  return out;
}

}  // namespace gp3
