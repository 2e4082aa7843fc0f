#pragma once

#include <array>
#include <string>

#include "gp3/adversary.hpp"
#include "gp3/camera.hpp"
#include "gp3/config.hpp"
#include "gp3/dataset.hpp"
#include "gp3/depthsup.hpp"
#include "gp3/render.hpp"
#include "gp3/scene.hpp"

namespace gp3 {

/// Baseline camera model phi = clamp(phi' + delta(phi', z, c)), used by the
/// camera-regularization ablation as the collapse-prone alternative to the
/// Ball-in-Sphere generator.
class ResidualCameraGenerator {
 public:
  ResidualCameraGenerator() = default;
  ResidualCameraGenerator(const CameraPrior& prior, int z_dim, int n_classes,
                          int hidden, Rng& rng);

  Tensor forward(const Tensor& phi_prime, const Tensor& z, int c) const;
  void collect(ParamMap& pm, const std::string& prefix) const;

 private:
  CameraPrior prior_;
  int z_dim_ = 0, n_classes_ = 0;
  std::array<Linear, 3> net_;
};

enum class CameraReg { kNone, kResidual, kGradPen, kEmd };
CameraReg camera_reg_from_string(const std::string& s);

struct StepMetrics {
  long step = 0;
  double loss_g = 0.0;      // reported total: adversarial + weighted camera terms
  double loss_g_adv = 0.0;
  std::array<double, 6> cam_loss{};  // active regularizer values, zero if none
  bool cam_collapsed = false;
  double loss_d = 0.0;      // reported total: adversarial + distill + R1 terms
  double loss_d_adv = 0.0;
  double loss_dist = 0.0;
  double r1 = 0.0;
  std::array<int, 4> selection_counts{};  // raw, adapted 1..3
  double b_shift = 0.0;

  std::string to_line() const;
};

/// Owns every learnable piece and the training loop state. Single threaded;
/// with a fixed seed every step is bit-reproducible and the whole state
/// round-trips through a checkpoint.
class Trainer {
 public:
  Trainer(const ExperimentConfig& cfg, Dataset dataset);

  StepMetrics train_step();
  /// Discriminator-only step against a fixed fake batch rendered once at
  /// construction; used to probe distillation convergence.
  double d_only_step();

  long step() const { return step_; }
  const ExperimentConfig& config() const { return cfg_; }

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  /// Non-Flatness Score of the EMA generator at the prior-mean camera, with
  /// the lowest-density half of the quadrature samples culled per scene.
  double eval_nfs(int n_maps, int bins, int res, std::uint64_t eval_seed);

  /// Empirical std of each camera parameter under the trained camera model
  /// (prior draws pushed through it) and under the prior itself.
  std::array<double, 6> camera_posterior_std(int n_draws,
                                             std::uint64_t eval_seed);
  std::array<double, 6> camera_prior_std(int n_draws,
                                         std::uint64_t eval_seed) const;

  /// Full-image render of one EMA sample, for the CLI.
  void render_sample(std::uint64_t sample_seed, int res, Image* rgb,
                     DepthGrid* depth);

  // Exposed for tests.
  const ParamMap& g_params() const { return g_params_; }
  const ParamMap& c_params() const { return c_params_; }
  const ParamMap& a_params() const { return a_params_; }
  const ParamMap& d_params() const { return d_params_; }
  const TeacherExtractor& teacher() const { return teacher_; }
  const Dataset& dataset() const { return data_; }

 private:
  Tensor cam_forward(const Tensor& phi_prime, const Tensor& z, int c) const;
  void write_ema() const;

  struct Fake;  // one rendered fake sample with its graph
  Fake render_fake(Rng& rng);
  Tensor real_patch_rgbd(int item, const PatchSpec& patch) const;

  ExperimentConfig cfg_;
  Dataset data_;
  CameraReg reg_ = CameraReg::kGradPen;
  RenderConfig rc_;

  MappingNetwork map_;
  SynthesisNetwork synth_;
  SceneDecoder dec_;
  Tensor b_raw_;
  CameraGenerator cam_;
  ResidualCameraGenerator cam_res_;
  DepthAdaptor adaptor_;
  Discriminator disc_;
  TeacherExtractor teacher_;

  // EMA copies of the generator-side nets, refreshed before evaluation.
  MappingNetwork map_ema_;
  SynthesisNetwork synth_ema_;
  SceneDecoder dec_ema_;
  Tensor b_raw_ema_;
  ParamMap ema_dst_;

  ParamMap g_params_, c_params_, a_params_, d_params_;
  AdamOpt opt_g_, opt_c_, opt_a_, opt_d_;
  EmaTracker ema_;

  Rng rng_;
  long step_ = 0;

  // d_only_step fixture
  Tensor dfix_fakes_;
  std::vector<int> dfix_fake_classes_, dfix_real_items_;
  std::vector<std::array<double, 3>> dfix_psi_;
  std::vector<PatchSpec> dfix_patches_;
};

}  // namespace gp3
