#pragma once

#include <array>
#include <string>
#include <vector>

#include "gp3/nn.hpp"
#include "gp3/rng.hpp"
#include "gp3/tensor.hpp"

namespace gp3 {

struct LossWeights {
  double pos = 0.3;
  double fov = 0.03;
  double lookat = 0.003;
  double dist = 1.0;
  double r1 = 0.1;

  /// Camera-penalty lambdas in parameter-vector order
  /// (pos yaw, pos pitch, fov, look yaw, look pitch, look radius).
  std::array<double, 6> per_camera_param() const {
    return {pos, pos, fov, lookat, lookat, lookat};
  }
};

/// Frozen randomly initialized conv net producing teacher features from RGB.
/// Weights are immutable after construction and never receive gradient.
class TeacherExtractor {
 public:
  TeacherExtractor() = default;
  TeacherExtractor(int feat_dim, Rng& rng);

  /// (B,3,h,w) -> (B, feat_dim). Output carries no graph.
  Tensor forward(const Tensor& rgb) const;

  int feat_dim() const { return feat_dim_; }
  /// Frozen weights, exposed for bitwise immutability checks.
  std::vector<std::vector<double>> weights_snapshot() const;

 private:
  int feat_dim_ = 0;
  std::array<Conv2dLayer, 3> convs_;
  Linear head_;
};

// Precomputed-feature file: 8-byte magic "GP3FEAT1", u32 count, u32 dim,
// then count*dim float64 little-endian. Lets a genuine pretrained extractor
// replace the random teacher without touching training code.
void write_feature_file(const std::string& path,
                        const std::vector<std::vector<double>>& feats);
std::vector<std::vector<double>> read_feature_file(const std::string& path);

/// Conv classifier over (C_in + 3) channels: the color-depth input plus three
/// constant patch-parameter channels. Two heads share the trunk: a scalar
/// score (with projection conditioning on the class embedding) and a feature
/// vector matching the teacher dimension.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(int in_channels, int n_classes, int feat_dim, int base_ch,
                int patch_res, Rng& rng);

  struct Out {
    Tensor score;  // (B)
    Tensor feat;   // (B, feat_dim)
  };

  Out forward(const Tensor& rgbd, const std::vector<int>& classes,
              const std::vector<std::array<double, 3>>& psi) const;

  void collect(ParamMap& pm, const std::string& prefix) const;
  int in_channels() const { return in_channels_; }
  int feat_dim() const { return feat_dim_; }

 private:
  int in_channels_ = 0, n_classes_ = 0, feat_dim_ = 0;
  std::array<Conv2dLayer, 3> convs_;
  Linear trunk_;
  Linear score_head_;
  Linear feat_head_;
  Tensor class_embed_;  // (n_classes, trunk_dim)
};

/// Non-saturating losses. Generator: mean softplus(-s_fake).
/// Discriminator: mean softplus(-s_real) + mean softplus(s_fake).
Tensor adv_loss_gen(const Tensor& fake_scores);
Tensor adv_loss_disc(const Tensor& real_scores, const Tensor& fake_scores);

/// 1/2 of the batch-mean squared input-gradient norm of the score.
double r1_penalty_value(const Discriminator& d, const Tensor& rgbd,
                        const std::vector<int>& classes,
                        const std::vector<std::array<double, 3>>& psi);

/// Training surrogate: a scalar whose parameter gradient equals the R1
/// penalty's, built from detached input gradients and a central-difference
/// directional derivative (two extra forward passes).
Tensor r1_surrogate(const Discriminator& d, const Tensor& rgbd,
                    const std::vector<int>& classes,
                    const std::vector<std::array<double, 3>>& psi,
                    double fd_step = 1e-4);

/// Squared Euclidean distance, summed over features, averaged over the batch.
Tensor distill_loss(const Tensor& teacher_feats, const Tensor& disc_feats);

/// L_G = adv + sum_i lambda_i * cam_losses[i], lambdas per parameter group.
double generator_loss(double adv, const std::array<double, 6>& cam_losses,
                      const LossWeights& w);
/// L_D = adv + lambda_dist * dist + lambda_r1 * r1.
double discriminator_loss(double adv, double dist, double r1,
                          const LossWeights& w);

}  // namespace gp3
