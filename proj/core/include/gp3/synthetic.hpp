#pragma once

#include <array>
#include <vector>

#include "gp3/camera.hpp"
#include "gp3/io.hpp"
#include "gp3/render.hpp"
#include "gp3/rng.hpp"

namespace gp3 {

/// Solid primitive with a constant interior density and albedo.
struct Primitive {
  enum Type { kSphere, kBox };
  Type type = kSphere;
  std::array<double, 3> center{};
  double size = 0.2;  // radius, or box half-extent
  std::array<double, 3> albedo{0.5, 0.5, 0.5};

  bool contains(double x, double y, double z) const;
};

/// Procedural scene: a handful of primitives near the origin, constant sigma
/// inside, vacuum outside, white background. Analytic depth for any ray.
struct SyntheticScene {
  std::vector<Primitive> prims;
  double sigma_inside = 400.0;

  double density(double x, double y, double z) const;
  std::array<double, 3> albedo_at(double x, double y, double z) const;

  /// Distance along the unit ray to the first surface hit within [t_lo, t_hi];
  /// t_hi when the ray misses everything.
  double first_hit(const std::array<double, 3>& origin,
                   const std::array<double, 3>& dir, double t_lo,
                   double t_hi) const;

  void validate() const;  // primitives must stay inside the scene cube

  /// Class 0 builds sphere scenes, class 1 box scenes.
  static SyntheticScene random(int class_id, Rng& rng);
};

struct SyntheticRender {
  Image rgb;
  DepthGrid depth_quad;  // volumetric depth moment, 0 on empty rays
  DepthGrid depth_true;  // analytic first hit, t_far on background
};

/// Plain numeric (graph-free) full-image render, midpoint quadrature.
SyntheticRender render_synthetic(const SyntheticScene& scene, const View& view,
                                 double fov, int res, const RenderConfig& cfg);

/// Frontal-ish ground-truth camera distribution used by dataset generation.
CameraParams sample_gt_camera(Rng& rng);

}  // namespace gp3
