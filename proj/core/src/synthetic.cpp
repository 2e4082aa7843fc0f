#include "gp3/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gp3 {

bool Primitive::contains(double x, double y, double z) const {
  const double dx = x - center[0], dy = y - center[1], dz = z - center[2];
  if (type == kSphere) return dx * dx + dy * dy + dz * dz <= size * size;
  return std::abs(dx) <= size && std::abs(dy) <= size && std::abs(dz) <= size;
}

double SyntheticScene::density(double x, double y, double z) const {
  for (const auto& p : prims)
    if (p.contains(x, y, z)) return sigma_inside;
  return 0.0;
}

std::array<double, 3> SyntheticScene::albedo_at(double x, double y,
                                                double z) const {
  for (const auto& p : prims)
    if (p.contains(x, y, z)) return p.albedo;
  return {1.0, 1.0, 1.0};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Entry distance of a unit ray into one primitive, or +inf.
double entry_t(const Primitive& p, const std::array<double, 3>& o,
               const std::array<double, 3>& d) {
  const double ox = o[0] - p.center[0], oy = o[1] - p.center[1],
               oz = o[2] - p.center[2];
  if (p.type == Primitive::kSphere) {
    const double b = ox * d[0] + oy * d[1] + oz * d[2];
    const double c = ox * ox + oy * oy + oz * oz - p.size * p.size;
    const double disc = b * b - c;
    if (disc < 0.0) return kInf;
    const double s = std::sqrt(disc);
    const double t0 = -b - s, t1 = -b + s;
    if (t1 < 0.0) return kInf;
    return t0 >= 0.0 ? t0 : 0.0;  // inside counts as immediate entry
  }
  // Slab test.
  double tmin = -kInf, tmax = kInf;
  const double oo[3] = {ox, oy, oz};
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (std::abs(oo[a]) > p.size) return kInf;
      continue;
    }
    double t0 = (-p.size - oo[a]) / d[a];
    double t1 = (p.size - oo[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
  }
  if (tmin > tmax || tmax < 0.0) return kInf;
  return tmin >= 0.0 ? tmin : 0.0;
}

}  // namespace

double SyntheticScene::first_hit(const std::array<double, 3>& origin,
                                 const std::array<double, 3>& dir, double t_lo,
                                 double t_hi) const {
  double best = kInf;
  for (const auto& p : prims) best = std::min(best, entry_t(p, origin, dir));
  if (best < t_lo || best > t_hi) return t_hi;
  return best;
}

void SyntheticScene::validate() const {
  for (const auto& p : prims) {
    for (int a = 0; a < 3; ++a)
      if (std::abs(p.center[a]) + p.size > 1.0)
        throw Error("SyntheticScene: primitive leaves the scene cube");
    if (p.size <= 0.0) throw Error("SyntheticScene: nonpositive size");
  }
}

SyntheticScene SyntheticScene::random(int class_id, Rng& rng) {
  if (class_id < 0 || class_id > 1)
    throw Error("SyntheticScene: class must be 0 or 1");
  SyntheticScene s;
  const Primitive::Type type =
      class_id == 0 ? Primitive::kSphere : Primitive::kBox;
  const int n = 1 + static_cast<int>(rng.uniform_index(2));
  for (int i = 0; i < n; ++i) {
    Primitive p;
    p.type = type;
    // Kept small and central so surfaces stay inside the [t_n, t_f] shell
    // seen from the outer sphere.
    const double spread = i == 0 ? 0.05 : 0.12;
    for (int a = 0; a < 3; ++a) p.center[a] = rng.uniform(-spread, spread);
    p.size = i == 0 ? rng.uniform(0.12, 0.2) : rng.uniform(0.05, 0.1);
    for (int a = 0; a < 3; ++a) p.albedo[a] = rng.uniform(0.1, 0.9);
    s.prims.push_back(p);
  }
  s.validate();
  return s;
}

SyntheticRender render_synthetic(const SyntheticScene& scene, const View& view,
                                 double fov, int res,
                                 const RenderConfig& cfg) {
  SyntheticRender out;
  out.rgb.h = out.rgb.w = res;
  out.rgb.rgb.assign(static_cast<size_t>(res) * res * 3, 0.0);
  out.depth_quad.h = out.depth_quad.w = res;
  out.depth_quad.d.assign(static_cast<size_t>(res) * res, 0.0);
  out.depth_true = out.depth_quad;

  const double th = std::tan(fov / 2.0);
  const double dt = (cfg.t_far - cfg.t_near) / cfg.n_steps;
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      const double u = 2.0 * (j + 0.5) / res - 1.0;
      const double v = 1.0 - 2.0 * (i + 0.5) / res;
      std::array<double, 3> d;
      double norm = 0.0;
      for (int a = 0; a < 3; ++a) {
        d[a] = u * th * view.right[a] + v * th * view.up[a] + view.forward[a];
        norm += d[a] * d[a];
      }
      norm = std::sqrt(norm);
      for (int a = 0; a < 3; ++a) d[a] /= norm;

      double trans = 1.0, wsum = 0.0, depth = 0.0;
      double rgb[3] = {0.0, 0.0, 0.0};
      for (int k = 0; k < cfg.n_steps; ++k) {
        const double t = cfg.t_near + (k + 0.5) * dt;
        const double px = view.origin[0] + t * d[0];
        const double py = view.origin[1] + t * d[1];
        const double pz = view.origin[2] + t * d[2];
        const double sg = scene.density(px, py, pz);
        if (sg <= 0.0) continue;
        const double alpha = 1.0 - std::exp(-sg * dt);
        const double w = trans * alpha;
        const auto alb = scene.albedo_at(px, py, pz);
        for (int a = 0; a < 3; ++a) rgb[a] += w * alb[a];
        depth += w * t;
        wsum += w;
        trans *= 1.0 - alpha;
        if (trans < 1e-7) break;
      }
      const size_t pix = static_cast<size_t>(i) * res + j;
      for (int a = 0; a < 3; ++a)
        out.rgb.rgb[pix * 3 + a] = rgb[a] + (1.0 - wsum) * cfg.background[a];
      out.depth_quad.d[pix] = depth;
      out.depth_true.d[pix] =
          scene.first_hit(view.origin, d, cfg.t_near, cfg.t_far);
    }
  }
  return out;
}

CameraParams sample_gt_camera(Rng& rng) {
  constexpr double kPi = 3.14159265358979323846;
  CameraParams phi;
  phi.v[CameraParams::kPosYaw] = rng.uniform(-0.5, 0.5);
  phi.v[CameraParams::kPosPitch] = rng.uniform(kPi / 2 - 0.25, kPi / 2 + 0.25);
  phi.v[CameraParams::kFov] = rng.uniform(0.5, 0.8);
  phi.v[CameraParams::kLookYaw] = rng.uniform(-kPi, kPi);
  phi.v[CameraParams::kLookPitch] = rng.uniform(0.5, kPi - 0.5);
  phi.v[CameraParams::kLookRadius] = rng.uniform(0.0, 0.05);
  return phi;
}

}  // namespace gp3
