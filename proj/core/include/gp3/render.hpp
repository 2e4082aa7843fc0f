#pragma once

#include <array>
#include <functional>
#include <utility>

#include "gp3/camera.hpp"
#include "gp3/rng.hpp"
#include "gp3/tensor.hpp"

namespace gp3 {

/// Sub-square [dx, dx+scale] x [dy, dy+scale] of the unit image square,
/// sampled at h x w pixels.
struct PatchSpec {
  double scale = 1.0;
  double dx = 0.0;
  double dy = 0.0;
  int h = 32;
  int w = 32;

  void validate() const;
  static PatchSpec sample(int h, int w, double s_min, Rng& rng);
};

struct RenderConfig {
  double t_near = 0.75;
  double t_far = 1.25;
  int n_steps = 48;
  std::array<double, 3> background{1.0, 1.0, 1.0};
  bool stratified = true;
};

/// Pinhole rays through the patch, row-major pixel order.
struct RayBatchT {
  Tensor origins;  // (N,3)
  Tensor dirs;     // (N,3), unit rows
  double t_near = 0.0;
  double t_far = 0.0;
  int h = 0;
  int w = 0;
};

/// Radiance field sampler: flattened coordinates (M) -> (rgb (M,3), sigma (M)).
using FieldFn = std::function<std::pair<Tensor, Tensor>(
    const Tensor& x, const Tensor& y, const Tensor& z)>;

struct RenderOutT {
  Tensor rgb;     // (N,3) in [0,1]
  Tensor depth;   // (N), raw, world units along the ray
  Tensor weight;  // (N), accumulated opacity in [0,1]
};

RayBatchT gen_rays(const ViewT& view, const Tensor& fov, const PatchSpec& patch,
                   double t_near, double t_far);

/// Quadrature of the emission-absorption integrals over stratified (or
/// midpoint, when cfg.stratified is false or rng is null) samples. Raw depth
/// is the unweighted transmittance-density moment: empty rays give depth 0.
RenderOutT volume_render(const FieldFn& field, const RayBatchT& rays,
                         const RenderConfig& cfg, Rng* rng = nullptr);

/// d_bar = 2 (d - (t_n + t_f + b)/2) / (t_f - t_n - b), with scalar tensor b.
Tensor normalize_depth(const Tensor& d, double t_near, double t_far,
                       const Tensor& b);

/// Maps an unconstrained scalar parameter into the legal shift range
/// [0, b_max] by sigmoid; b_max defaults below t_f - t_n to keep the
/// normalization denominator positive during training.
Tensor shift_from_raw(const Tensor& b_raw, double t_near, double t_far);

}  // namespace gp3
