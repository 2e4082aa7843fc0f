#include "gp3/depthsup.hpp"

#include <algorithm>
#include <cmath>

namespace gp3 {

DepthAdaptor::DepthAdaptor(int filters, Rng& rng) {
  convs_[0] = Conv2dLayer::create(1, filters, 5, 1, 2, rng);
  convs_[1] = Conv2dLayer::create(filters, filters, 5, 1, 2, rng);
  convs_[2] = Conv2dLayer::create(filters, filters, 5, 1, 2, rng);
  out_ = Conv2dLayer::create(filters, 1, 1, 1, 0, rng);
}

std::array<Tensor, 3> DepthAdaptor::forward(const Tensor& d_bar) const {
  if (d_bar.ndim() != 4 || d_bar.dim(1) != 1)
    throw Error("DepthAdaptor: input must be (B,1,h,w)");
  std::array<Tensor, 3> maps;
  Tensor h = d_bar;
  for (int i = 0; i < kLayers; ++i) {
    h = leaky_relu(convs_[i].forward(h));
    maps[i] = tanh(out_.forward(h));
  }
  return maps;
}

void DepthAdaptor::collect(ParamMap& pm, const std::string& prefix) const {
  for (int i = 0; i < kLayers; ++i)
    convs_[i].collect(pm, prefix + ".conv" + std::to_string(i));
  out_.collect(pm, prefix + ".out");
}

void SelectionPolicy::validate() const {
  if (p_raw < 0.0 || p_raw > 1.0)
    throw Error("SelectionPolicy: p_raw must lie in [0,1]");
}

int SelectionPolicy::draw(Rng& rng) const {
  validate();
  if (rng.uniform() < p_raw) return 0;
  return 1 + static_cast<int>(rng.uniform_index(3));
}

DepthSelection select_depth(const Tensor& d_bar,
                            const std::array<Tensor, 3>& adapted,
                            const SelectionPolicy& policy, Rng& rng) {
  DepthSelection s;
  s.choice = policy.draw(rng);
  s.map = s.choice == 0 ? d_bar : adapted[s.choice - 1];
  return s;
}

std::vector<double> normalize_real_depth(const std::vector<double>& raw) {
  if (raw.empty()) throw Error("normalize_real_depth: empty grid");
  const auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
  const double mn = *mn_it, mx = *mx_it;
  std::vector<double> out(raw.size(), 0.0);
  if (mx - mn <= 0.0) return out;  // constant grid -> zeros
  for (size_t i = 0; i < raw.size(); ++i)
    out[i] = 2.0 * (raw[i] - mn) / (mx - mn) - 1.0;
  return out;
}

void CorruptionConfig::validate() const {
  if (blur_sigma < 0.0 || noise_std < 0.0 || remap_strength < 0.0 ||
      remap_strength > 1.0)
    throw Error("CorruptionConfig: negative or out-of-range field");
}

namespace {

// Reflect-101 index (mirror about the edge sample).
int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Each pass scatters a pixel's unit kernel mass, folding out-of-range taps
// back inside via reflect-101. Unlike a reflected gather this conserves the
// image sum exactly, so a pure blur keeps the per-image mean.
void blur_separable(std::vector<double>& d, int h, int w, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = (static_cast<int>(k.size()) - 1) / 2;
  std::vector<double> tmp(d.size(), 0.0);
  // horizontal
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int o = -r; o <= r; ++o)
        tmp[y * w + reflect101(x + o, w)] += k[o + r] * d[y * w + x];
  // vertical
  std::fill(d.begin(), d.end(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int o = -r; o <= r; ++o)
        d[reflect101(y + o, h) * w + x] += k[o + r] * tmp[y * w + x];
}

}  // namespace

DepthGrid simulate_estimated_depth(const DepthGrid& true_depth,
                                   const CorruptionConfig& cfg, Rng& rng) {
  cfg.validate();
  DepthGrid g = true_depth;
  if (cfg.blur_sigma > 0.0) blur_separable(g.d, g.h, g.w, cfg.blur_sigma);
  if (cfg.remap_strength > 0.0) {
    const auto [mn_it, mx_it] = std::minmax_element(g.d.begin(), g.d.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx - mn > 0.0) {
      for (auto& v : g.d) {
        const double u = (v - mn) / (mx - mn);
        const double remapped = mn + (mx - mn) * u * u * (3.0 - 2.0 * u);
        v = (1.0 - cfg.remap_strength) * v + cfg.remap_strength * remapped;
      }
    }
  }
  if (cfg.noise_std > 0.0)
    for (auto& v : g.d) v += rng.normal(0.0, cfg.noise_std);
  return g;
}

}  // namespace gp3
