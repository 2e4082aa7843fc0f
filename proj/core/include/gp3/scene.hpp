#pragma once

#include "gp3/nn.hpp"
#include "gp3/rng.hpp"
#include "gp3/tensor.hpp"

namespace gp3 {

/// Three axis-aligned feature planes, each (C_feat, P, P), sharing extents.
struct TriPlane {
  Tensor xy;
  Tensor yz;
  Tensor xz;

  int c_feat() const { return xy.dim(0); }
  int res() const { return xy.dim(1); }
};

/// 2-layer MLP (z, one-hot class) -> style code w.
class MappingNetwork {
 public:
  MappingNetwork() = default;
  MappingNetwork(int z_dim, int n_classes, int hidden, int w_dim, Rng& rng);

  Tensor forward(const Tensor& z, int c) const;
  void collect(ParamMap& pm, const std::string& prefix) const;
  int w_dim() const { return w_dim_; }

 private:
  int z_dim_ = 0, n_classes_ = 0, w_dim_ = 0;
  Linear l1_, l2_;
};

/// Transposed-convolution decoder from w to the three feature planes.
/// w -> (C0,4,4) -> three stride-2 upsampling stages -> (3*C_feat, P, P).
class SynthesisNetwork {
 public:
  SynthesisNetwork() = default;
  SynthesisNetwork(int w_dim, int c_feat, int plane_res, Rng& rng);

  TriPlane forward(const Tensor& w) const;
  void collect(ParamMap& pm, const std::string& prefix) const;
  int c_feat() const { return c_feat_; }
  int plane_res() const { return plane_res_; }

 private:
  int c_feat_ = 0, plane_res_ = 0, base_ch_ = 0;
  Linear stem_;
  std::vector<ConvT2dLayer> ups_;
  Conv2dLayer head_;
};

/// Mean of the three per-plane bilinear interpolations at (x,y,z) in the
/// [-1,1]^3 scene cube. Coordinates outside the cube are clamped;
/// `clamped_count`, when given, receives the number of clamped lookups.
Tensor lookup(const TriPlane& planes, const Tensor& x, const Tensor& y,
              const Tensor& z, int* clamped_count = nullptr);

/// 2-layer MLP feature -> (RGB in [0,1]^3 via sigmoid, sigma >= 0 via
/// softplus). Output (N,4) with columns (r,g,b,sigma).
class SceneDecoder {
 public:
  SceneDecoder() = default;
  SceneDecoder(int c_feat, int hidden, Rng& rng);

  Tensor forward(const Tensor& features) const;
  void collect(ParamMap& pm, const std::string& prefix) const;

  /// Additive bias on the pre-softplus density logit; negative values start
  /// the scene nearly empty.
  void set_density_bias(double b) { density_bias_ = b; }

 private:
  Linear l1_, l2_;
  double density_bias_ = 0.0;
};

}  // namespace gp3
