#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gp3/dataset.hpp"
#include "gp3/trainer.hpp"

namespace gp3 {

/// Settings shared by the ablation drivers. `steps` overrides cfg.steps so the
/// sweeps stay inside a CPU-minutes budget.
struct AblationBudget {
  long steps = 1000;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int nfs_maps = 48;
  int nfs_bins = 64;
  int nfs_res = 16;
  int posterior_draws = 1024;
};

struct DepthAblationRow {
  std::string name;  // "P=0.5" or "no-ADS"
  bool ads = true;
  double p_raw = 0.5;
  std::vector<double> nfs_per_seed;
  double median_nfs = 0.0;
};

/// Depth-supervision sweep: P(raw depth) in {0, 0.25, 0.5, 1} plus the
/// no-depth-channel baseline. Each cell trains from scratch.
std::vector<DepthAblationRow> ablate_depth(const ExperimentConfig& base,
                                           const Dataset& data,
                                           const AblationBudget& budget,
                                           std::ostream* log = nullptr);

struct CameraAblationRow {
  std::string reg;
  std::array<double, 6> posterior_std{};
  std::array<double, 6> prior_std{};
  std::array<double, 6> ratio{};  // median over seeds, per parameter
};

/// Camera-regularizer sweep: {none, residual, gradpen, emd}, reporting the
/// per-parameter posterior/prior standard-deviation ratio.
std::vector<CameraAblationRow> ablate_camera(const ExperimentConfig& base,
                                             const Dataset& data,
                                             const AblationBudget& budget,
                                             std::ostream* log = nullptr);

/// NFS over the stored true depth maps of a generated dataset directory.
double dataset_true_depth_nfs(const std::string& dir, int bins = 64);

}  // namespace gp3
