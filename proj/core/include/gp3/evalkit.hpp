#pragma once

#include <functional>
#include <vector>

#include "gp3/tensor.hpp"

namespace gp3 {

/// Histogram of normalized depth values over [-1, 1].
struct DepthHistogram {
  int bins = 64;
  std::vector<long> counts;
  long total = 0;

  static DepthHistogram build(const std::vector<double>& depth, int bins);
  /// Shannon entropy of the normalized histogram (nats).
  double entropy() const;
};

/// Yields the i-th normalized depth map (values in [-1,1]) of N.
using DepthMapSampler = std::function<std::vector<double>(int)>;

/// Non-Flatness Score: mean over N maps of exp(entropy of the B-bin
/// depth-value histogram). Ranges over [1, B].
double nfs(const DepthMapSampler& sampler, int n_maps = 256, int bins = 64);

struct FeatureStats {
  std::vector<double> mean;       // (D)
  std::vector<double> cov;        // (D,D) row-major, regularized
  int dim = 0;

  static FeatureStats fit(const std::vector<std::vector<double>>& feats,
                          double eps = 1e-6);
};

/// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}).
double frechet_distance(const FeatureStats& a, const FeatureStats& b);

/// Indices of the ceil(q*N) highest-density samples under N(mu, Sigma + eps I),
/// in stable original order.
std::vector<int> instance_select(const std::vector<std::vector<double>>& feats,
                                 double keep_fraction, double eps = 1e-6);

}  // namespace gp3
