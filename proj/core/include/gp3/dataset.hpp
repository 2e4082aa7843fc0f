#pragma once

#include <string>
#include <vector>

#include "gp3/config.hpp"
#include "gp3/io.hpp"

namespace gp3 {

struct DatasetItem {
  Image rgb;
  DepthGrid depth_est;             // corrupted "estimated" depth, raw units
  std::vector<double> depth_norm;  // estimated depth normalized into [-1,1]
  int label = 0;
};

struct Dataset {
  int img_res = 0;
  int n_classes = 0;
  std::vector<DatasetItem> items;
};

/// Renders cfg.n_scenes scenes into `dir`: pixmaps, true and estimated depth,
/// labels, a manifest (seed + config hash), and the ground-truth cameras
/// (recorded for analysis only; the loader never reads them). Refuses to write
/// into an existing non-empty directory unless `overwrite`.
void gen_dataset(const ExperimentConfig& cfg, const std::string& dir,
                 bool overwrite = false);

/// Reads images, estimated depth and labels. True depth and ground-truth
/// cameras are deliberately not loaded.
Dataset load_dataset(const std::string& dir);

}  // namespace gp3
