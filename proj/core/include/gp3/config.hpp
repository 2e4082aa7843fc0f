#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "gp3/adversary.hpp"
#include "gp3/camera.hpp"
#include "gp3/depthsup.hpp"

namespace gp3 {

/// Full experiment configuration. Loaded from JSON with unknown keys
/// rejected; every field has the documented default below.
struct ExperimentConfig {
  std::uint64_t seed = 1;

  // scene
  int z_dim = 16;
  int w_dim = 32;
  int map_hidden = 64;
  int c_feat = 8;
  int plane_res = 32;
  int decoder_hidden = 64;
  double density_bias = -4.0;

  // camera
  double r_outer = 1.0;
  int camera_hidden = 32;
  std::string camera_reg = "gradpen";  // none | residual | gradpen | emd
  int emd_samples = 64;

  // render
  double t_near = 0.75;
  double t_far = 1.25;
  int n_steps = 16;
  int patch_res = 12;
  double patch_s_min = 0.6;
  std::array<double, 3> background{1.0, 1.0, 1.0};

  // depth supervision
  bool ads = true;
  double p_raw = 0.5;
  int adaptor_filters = 16;
  CorruptionConfig corruption{1.0, 0.02, 0.5};

  // discriminator / teacher
  int disc_base_ch = 16;
  int teacher_dim = 16;

  // training
  int batch_size = 4;
  long steps = 5000;
  double lr = 2e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double ema_half_life = 500.0;
  int r1_interval = 1;

  // loss weights
  LossWeights weights;

  // dataset
  int n_scenes = 512;
  int img_res = 32;
  int n_classes = 2;

  CameraPrior camera_prior = CameraPrior::wide_default();

  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;
  /// Applies "key=value" overrides using the JSON field names
  /// (e.g. "train.steps=100").
  void apply_override(const std::string& key, const std::string& value);
  /// FNV-1a hash of the canonical serialized form.
  std::uint64_t hash() const;
  std::string to_json() const;
};

}  // namespace gp3
