#include "gp3/render.hpp"

#include <cmath>

namespace gp3 {

void PatchSpec::validate() const {
  if (!(scale > 0.0 && scale <= 1.0))
    throw Error("PatchSpec: scale must be in (0,1]");
  if (dx < 0.0 || dy < 0.0 || dx > 1.0 - scale + 1e-12 ||
      dy > 1.0 - scale + 1e-12)
    throw Error("PatchSpec: patch exceeds the unit image square");
  if (h < 1 || w < 1) throw Error("PatchSpec: resolution must be positive");
}

PatchSpec PatchSpec::sample(int h, int w, double s_min, Rng& rng) {
  PatchSpec p;
  p.h = h;
  p.w = w;
  p.scale = rng.uniform(s_min, 1.0);
  p.dx = rng.uniform(0.0, 1.0 - p.scale);
  p.dy = rng.uniform(0.0, 1.0 - p.scale);
  return p;
}

RayBatchT gen_rays(const ViewT& view, const Tensor& fov, const PatchSpec& patch,
                   double t_near, double t_far) {
  patch.validate();
  if (!(t_near < t_far)) throw Error("gen_rays: t_near must precede t_far");
  const int h = patch.h, w = patch.w, n = h * w;

  // Screen-plane multipliers per pixel (constant w.r.t. parameters).
  std::vector<double> coeff(static_cast<size_t>(n) * 3);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double xn = patch.dx + patch.scale * (j + 0.5) / w;
      const double yn = patch.dy + patch.scale * (i + 0.5) / h;
      coeff[(i * w + j) * 3 + 0] = 2.0 * xn - 1.0;
      coeff[(i * w + j) * 3 + 1] = 1.0 - 2.0 * yn;
      coeff[(i * w + j) * 3 + 2] = 1.0;
    }
  Tensor A = Tensor::from({n, 3}, std::move(coeff));

  Tensor tanf = tan(mul(fov, 0.5));
  Tensor M = stack_rows({reshape(scale(view.right, tanf), {3}),
                         reshape(scale(view.up, tanf), {3}), view.forward});
  Tensor dirs = matmul(A, M);
  Tensor norm = sqrt(sum_lastdim(square(dirs)));
  dirs = div_colvec(dirs, norm);

  Tensor origins =
      matmul(Tensor::full({n, 1}, 1.0), reshape(view.origin, {1, 3}));

  RayBatchT rb;
  rb.origins = origins;
  rb.dirs = dirs;
  rb.t_near = t_near;
  rb.t_far = t_far;
  rb.h = h;
  rb.w = w;
  return rb;
}

RenderOutT volume_render(const FieldFn& field, const RayBatchT& rays,
                         const RenderConfig& cfg, Rng* rng) {
  if (cfg.n_steps < 2) throw Error("volume_render: n_steps must be >= 2");
  const int n = rays.dirs.dim(0);
  const int s = cfg.n_steps;
  const double delta = (rays.t_far - rays.t_near) / s;

  std::vector<double> ts(static_cast<size_t>(n) * s);
  const bool strat = cfg.stratified && rng != nullptr;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < s; ++j) {
      const double xi = strat ? rng->uniform() : 0.5;
      ts[i * s + j] = rays.t_near + (j + xi) * delta;
    }
  Tensor T = Tensor::from({n, s}, ts);

  Tensor px = add_colvec(mul_colvec(T, col(rays.dirs, 0)),
                         col(rays.origins, 0));
  Tensor py = add_colvec(mul_colvec(T, col(rays.dirs, 1)),
                         col(rays.origins, 1));
  Tensor pz = add_colvec(mul_colvec(T, col(rays.dirs, 2)),
                         col(rays.origins, 2));

  auto [rgb_pts, sigma_pts] = field(reshape(px, {n * s}), reshape(py, {n * s}),
                                    reshape(pz, {n * s}));
  for (double v : sigma_pts.values())
    if (!std::isfinite(v)) throw Error("volume_render: non-finite density");

  Tensor a = mul(reshape(sigma_pts, {n, s}), delta);
  Tensor transmit = exp(neg(cumsum_exclusive_lastdim(a)));
  Tensor alpha = add(neg(exp(neg(a))), 1.0);  // 1 - exp(-sigma*delta)
  Tensor wgt = mul(transmit, alpha);          // (n,s)

  Tensor acc = sum_lastdim(wgt);             // (n)
  Tensor depth = sum_lastdim(mul(wgt, T));   // (n), no background term

  RenderOutT out;
  out.weight = acc;
  out.depth = depth;
  Tensor bg_scale = add(neg(acc), 1.0);  // (n)
  std::array<Tensor, 3> chans;
  for (int c = 0; c < 3; ++c) {
    Tensor cc = reshape(col(rgb_pts, c), {n, s});
    Tensor ic = sum_lastdim(mul(wgt, cc));
    chans[c] = add(ic, mul(bg_scale, cfg.background[c]));
  }
  out.rgb = concat_cols(concat_cols(reshape(chans[0], {n, 1}),
                                    reshape(chans[1], {n, 1})),
                        reshape(chans[2], {n, 1}));
  return out;
}

Tensor normalize_depth(const Tensor& d, double t_near, double t_far,
                       const Tensor& b) {
  if (b.size() != 1) throw Error("normalize_depth: b must be scalar");
  const double bv = b.values()[0];
  if (bv < 0.0 || bv > 0.5 * (t_near + t_far))
    throw Error("normalize_depth: shift b outside [0, (t_n+t_f)/2]");
  if (t_far - t_near - bv <= 0.0)
    throw Error("normalize_depth: non-positive denominator t_f - t_n - b");
  Tensor num = add_scalar_t(d, mul(add(b, t_near + t_far), -0.5));
  Tensor inv_den = div(Tensor::scalar(1.0),
                       add(neg(b), t_far - t_near));
  return mul(scale(num, inv_den), 2.0);
}

Tensor shift_from_raw(const Tensor& b_raw, double t_near, double t_far) {
  const double b_max =
      std::min(0.5 * (t_near + t_far), 0.8 * (t_far - t_near));
  return mul(sigmoid(b_raw), b_max);
}

}  // namespace gp3
