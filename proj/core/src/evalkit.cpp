#include "gp3/evalkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gp3 {

DepthHistogram DepthHistogram::build(const std::vector<double>& depth,
                                     int bins) {
  if (bins < 2) throw Error("DepthHistogram: need at least 2 bins");
  if (depth.empty()) throw Error("DepthHistogram: empty depth map");
  DepthHistogram h;
  h.bins = bins;
  h.counts.assign(bins, 0);
  for (double d : depth) {
    const double u = (std::clamp(d, -1.0, 1.0) + 1.0) / 2.0;
    int j = static_cast<int>(u * bins);
    if (j == bins) j = bins - 1;
    ++h.counts[j];
  }
  h.total = static_cast<long>(depth.size());
  return h;
}

double DepthHistogram::entropy() const {
  double h = 0.0;
  for (long c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

double nfs(const DepthMapSampler& sampler, int n_maps, int bins) {
  if (n_maps < 1) throw Error("nfs: need at least one depth map");
  double acc = 0.0;
  for (int i = 0; i < n_maps; ++i) {
    const std::vector<double> d = sampler(i);
    acc += std::exp(DepthHistogram::build(d, bins).entropy());
  }
  return acc / n_maps;
}

FeatureStats FeatureStats::fit(const std::vector<std::vector<double>>& feats,
                               double eps) {
  if (feats.empty()) throw Error("FeatureStats: empty feature set");
  const int n = static_cast<int>(feats.size());
  const int d = static_cast<int>(feats[0].size());
  FeatureStats s;
  s.dim = d;
  s.mean.assign(d, 0.0);
  for (const auto& f : feats) {
    if (static_cast<int>(f.size()) != d)
      throw Error("FeatureStats: ragged features");
    for (int j = 0; j < d; ++j) s.mean[j] += f[j];
  }
  for (auto& m : s.mean) m /= n;
  s.cov.assign(static_cast<size_t>(d) * d, 0.0);
  for (const auto& f : feats)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        s.cov[i * d + j] += (f[i] - s.mean[i]) * (f[j] - s.mean[j]);
  const double denom = n > 1 ? n - 1 : 1;
  for (auto& c : s.cov) c /= denom;
  for (int i = 0; i < d; ++i) s.cov[i * d + i] += eps;
  return s;
}

double frechet_distance(const FeatureStats& a, const FeatureStats& b) {
  if (a.dim != b.dim) throw Error("frechet_distance: dimension mismatch");
  const int d = a.dim;
  Eigen::Map<const Eigen::MatrixXd> Sa(a.cov.data(), d, d);
  Eigen::Map<const Eigen::MatrixXd> Sb(b.cov.data(), d, d);

  double mean_term = 0.0;
  for (int i = 0; i < d; ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mean_term += diff * diff;
  }

  // tr((Sa Sb)^{1/2}) via Sa^{1/2} Sb Sa^{1/2}, which is symmetric PSD.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esa(Sa);
  if (esa.info() != Eigen::Success)
    throw Error("frechet_distance: eigendecomposition failed");
  Eigen::VectorXd ev = esa.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd sqrt_sa = esa.eigenvectors() *
                            ev.cwiseSqrt().asDiagonal() *
                            esa.eigenvectors().transpose();
  Eigen::MatrixXd inner = sqrt_sa * Sb * sqrt_sa;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esi(inner);
  if (esi.info() != Eigen::Success)
    throw Error("frechet_distance: matrix square root failed to converge");
  const double tr_sqrt = esi.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  return mean_term + Sa.trace() + Sb.trace() - 2.0 * tr_sqrt;
}

std::vector<int> instance_select(const std::vector<std::vector<double>>& feats,
                                 double keep_fraction, double eps) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw Error("instance_select: keep_fraction must lie in (0, 1]");
  const int n = static_cast<int>(feats.size());
  if (n == 0) throw Error("instance_select: empty feature set");
  const FeatureStats stats = FeatureStats::fit(feats, eps);
  const int d = stats.dim;
  Eigen::Map<const Eigen::MatrixXd> S(stats.cov.data(), d, d);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw Error("instance_select: covariance not positive definite");

  // Log-density ranking needs only the Mahalanobis term.
  std::vector<double> maha(n);
  Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(stats.mean.data(), d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(feats[i].data(), d);
    Eigen::VectorXd y = llt.matrixL().solve(x - mu);
    maha[i] = y.squaredNorm();
  }
  const int keep = static_cast<int>(std::ceil(keep_fraction * n));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return maha[a] < maha[b]; });
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace gp3
