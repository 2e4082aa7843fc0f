#pragma once

#include <array>

#include "gp3/io.hpp"
#include "gp3/nn.hpp"
#include "gp3/rng.hpp"
#include "gp3/tensor.hpp"

namespace gp3 {

/// Three 5x5 conv layers (64 filters, LeakyReLU) over the normalized rendered
/// depth, with one shared 1x1 output conv tapped after each layer. Outputs are
/// tanh-squashed into [-1,1]. Deliberately shallow: it must not be able to
/// fabricate arbitrary depth.
class DepthAdaptor {
 public:
  DepthAdaptor() = default;
  DepthAdaptor(int filters, Rng& rng);

  /// d_bar (B,1,h,w) in [-1,1] -> three progressively adapted maps, same shape.
  std::array<Tensor, 3> forward(const Tensor& d_bar) const;

  void collect(ParamMap& pm, const std::string& prefix) const;
  static constexpr int kLayers = 3;

 private:
  std::array<Conv2dLayer, 3> convs_;
  Conv2dLayer out_;  // shared 1x1 head
};

/// Stochastic choice between the raw normalized depth and the three adapted
/// maps. p_raw is the probability of showing the raw map; the rest is split uniformly.
struct SelectionPolicy {
  double p_raw = 0.5;

  void validate() const;
  /// Returns 0 for the raw map, 1..3 for adapted map i.
  int draw(Rng& rng) const;
};

struct DepthSelection {
  Tensor map;  // the selected (B,1,h,w) tensor
  int choice = 0;
};

DepthSelection select_depth(const Tensor& d_bar,
                            const std::array<Tensor, 3>& adapted,
                            const SelectionPolicy& policy, Rng& rng);

/// Affine map sending (min,max) -> (-1,+1); a constant grid maps to zeros.
std::vector<double> normalize_real_depth(const std::vector<double>& raw);

struct CorruptionConfig {
  double blur_sigma = 0.0;    // pixels
  double noise_std = 0.0;     // additive gaussian, after remap
  double remap_strength = 0.0;  // in [0,1]; 1 = full monotone remap

  void validate() const;
};

/// Stand-in for a monocular depth estimator: gaussian blur (reflect-101
/// padding), a smooth monotone value remap toward relative depth, then
/// additive noise.
DepthGrid simulate_estimated_depth(const DepthGrid& true_depth,
                                   const CorruptionConfig& cfg, Rng& rng);

}  // namespace gp3
