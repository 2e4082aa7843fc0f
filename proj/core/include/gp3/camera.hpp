#pragma once

#include <array>
#include <functional>
#include <optional>

#include "gp3/nn.hpp"
#include "gp3/rng.hpp"
#include "gp3/tensor.hpp"

namespace gp3 {

// Parameter vector layout: [pos_yaw, pos_pitch, fov, lookat_yaw, lookat_pitch,
// lookat_radius]. Angles in radians, radius in world units. Position lives on
// the outer sphere; the look-at point inside the inner ball.
struct CameraParams {
  static constexpr int kDim = 6;
  static constexpr int kPosYaw = 0;
  static constexpr int kPosPitch = 1;
  static constexpr int kFov = 2;
  static constexpr int kLookYaw = 3;
  static constexpr int kLookPitch = 4;
  static constexpr int kLookRadius = 5;

  std::array<double, kDim> v{};

  double pos_yaw() const { return v[kPosYaw]; }
  double pos_pitch() const { return v[kPosPitch]; }
  double fov() const { return v[kFov]; }
  double lookat_yaw() const { return v[kLookYaw]; }
  double lookat_pitch() const { return v[kLookPitch]; }
  double lookat_radius() const { return v[kLookRadius]; }
};

struct ParamRange {
  double lo = 0.0;
  double hi = 1.0;
};

enum class PriorFamily { kUniform, kTruncGauss };

struct PriorSpec {
  ParamRange range;
  PriorFamily family = PriorFamily::kUniform;
  double mean = 0.0;    // truncated-gaussian only
  double stddev = 1.0;  // truncated-gaussian only
};

/// Per-parameter sampling distribution for the prior camera phi'.
struct CameraPrior {
  std::array<PriorSpec, CameraParams::kDim> spec;

  /// Wide default: yaw in [-pi,pi], pitch in [pi/2-0.8, pi/2+0.8], fov in
  /// [0.2,1.2] rad, look-at point within radius 0.3 of the origin.
  static CameraPrior wide_default();

  void validate() const;
  CameraParams sample(Rng& rng) const;
  CameraParams mean_camera() const;
  double range_lo(int i) const { return spec[i].range.lo; }
  double range_hi(int i) const { return spec[i].range.hi; }
};

/// Camera generator C(phi', z, c): three MLP heads, Softplus activations,
/// sigmoid squashed into the prior ranges. Position head is conditioned on
/// the class, look-at and fov heads on the scene latent.
class CameraGenerator {
 public:
  CameraGenerator() = default;
  CameraGenerator(const CameraPrior& prior, int z_dim, int n_classes,
                  int hidden, Rng& rng);

  /// phi' (6), z (z_dim), class index -> phi (6). Differentiable in phi'.
  Tensor forward(const Tensor& phi_prime, const Tensor& z, int c) const;

  CameraParams forward_params(const CameraParams& phi_prime,
                              const std::vector<double>& z, int c) const;

  void collect(ParamMap& pm, const std::string& prefix) const;
  const CameraPrior& prior() const { return prior_; }
  int z_dim() const { return z_dim_; }

 private:
  CameraPrior prior_;
  int z_dim_ = 0;
  int n_classes_ = 0;
  // 3-layer heads
  std::array<Linear, 3> pos_head_;
  std::array<Linear, 3> fov_head_;
  std::array<Linear, 3> look_head_;
};

struct CameraPenalty {
  std::array<double, CameraParams::kDim> loss{};
  bool collapsed = false;
};

/// Per-parameter Camera Gradient Penalty |d phi_i / d phi'_i| + its inverse,
/// evaluated on the diagonal derivatives of `fn` at phi_prime. A vanishing
/// derivative yields the capped value 1e6 and sets `collapsed`.
CameraPenalty camera_gradient_penalty(
    const std::function<Tensor(const Tensor&)>& fn, const Tensor& phi_prime);

/// Batch average over (phi', z, c) samples through a camera generator.
CameraPenalty camera_gradient_penalty(const CameraGenerator& gen,
                                      const std::vector<Tensor>& phi_primes,
                                      const std::vector<Tensor>& zs,
                                      const std::vector<int>& cs);

/// Differentiable training surrogate for the penalty: a scalar whose gradient
/// w.r.t. the generator parameters equals the penalty's, built from detached
/// penalty slopes and central-difference diagonal derivatives. `weights` are
/// the per-parameter lambda multipliers folded into the surrogate.
Tensor camera_penalty_surrogate(const CameraGenerator& gen,
                                const std::vector<Tensor>& phi_primes,
                                const std::vector<Tensor>& zs,
                                const std::vector<int>& cs,
                                const std::array<double, 6>& weights,
                                double fd_step = 1e-4);

/// 1-D EMD between generator samples of each camera parameter and the uniform
/// distribution over that parameter's range. Differentiable through the
/// generator. Returns the six per-parameter losses as scalar tensors.
std::array<Tensor, CameraParams::kDim> emd_entropy_reg(
    const CameraGenerator& gen, const CameraPrior& prior,
    const std::vector<Tensor>& zs, const std::vector<int>& cs, Rng& rng,
    int n_samples = 64);

struct View {
  std::array<double, 3> origin{};
  std::array<double, 3> right{};
  std::array<double, 3> up{};
  std::array<double, 3> forward{};
  std::array<double, 3> lookat{};
};

/// Differentiable view frame (tensors of shape (3)).
struct ViewT {
  Tensor origin;
  Tensor right;
  Tensor up;
  Tensor forward;
};

// Spherical convention (fixed, also used by the synthetic dataset):
//   x = R sin(pitch) cos(yaw), y = R sin(pitch) sin(yaw), z = R cos(pitch),
// with pitch in (0, pi) measured from +z. Pitch is clamped 1e-3 away from the
// poles so the world-up frame stays well defined.
View build_view(const CameraParams& phi, double r_outer);
ViewT build_view_t(const Tensor& phi, double r_outer);

}  // namespace gp3
