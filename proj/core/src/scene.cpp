#include "gp3/scene.hpp"

#include <cmath>

namespace gp3 {

MappingNetwork::MappingNetwork(int z_dim, int n_classes, int hidden, int w_dim,
                               Rng& rng)
    : z_dim_(z_dim), n_classes_(n_classes), w_dim_(w_dim) {
  l1_ = Linear::create(z_dim + n_classes, hidden, rng);
  l2_ = Linear::create(hidden, w_dim, rng);
}

Tensor MappingNetwork::forward(const Tensor& z, int c) const {
  if (z.size() != z_dim_) throw Error("MappingNetwork: bad z dimension");
  if (c < 0 || c >= n_classes_)
    throw Error("MappingNetwork: class index out of range");
  Tensor onehot = Tensor::zeros({n_classes_});
  onehot.mutable_values()[c] = 1.0;
  Tensor in = reshape(concat(z, onehot), {1, z_dim_ + n_classes_});
  Tensor h = leaky_relu(l1_.forward(in));
  return reshape(leaky_relu(l2_.forward(h)), {w_dim_});
}

void MappingNetwork::collect(ParamMap& pm, const std::string& prefix) const {
  l1_.collect(pm, prefix + ".l1");
  l2_.collect(pm, prefix + ".l2");
}

SynthesisNetwork::SynthesisNetwork(int w_dim, int c_feat, int plane_res,
                                   Rng& rng)
    : c_feat_(c_feat), plane_res_(plane_res) {
  if (plane_res < 8 || (plane_res & (plane_res - 1)) != 0)
    throw Error("SynthesisNetwork: plane_res must be a power of two >= 8");
  base_ch_ = 32;
  stem_ = Linear::create(w_dim, base_ch_ * 4 * 4, rng);
  int res = 4;
  int ch = base_ch_;
  while (res < plane_res) {
    const int next_ch = std::max(8, ch / 2);
    ups_.push_back(ConvT2dLayer::create(ch, next_ch, 4, 2, 1, rng));
    ch = next_ch;
    res *= 2;
  }
  head_ = Conv2dLayer::create(ch, 3 * c_feat, 3, 1, 1, rng);
}

TriPlane SynthesisNetwork::forward(const Tensor& w) const {
  Tensor h = reshape(stem_.forward(reshape(w, {1, w.size()})),
                     {1, base_ch_, 4, 4});
  for (const auto& up : ups_) h = leaky_relu(up.forward(h));
  Tensor out = head_.forward(h);  // (1, 3*C, P, P)
  TriPlane tp;
  const int C = c_feat_, P = plane_res_;
  tp.xy = reshape(channels(out, 0, C), {C, P, P});
  tp.yz = reshape(channels(out, C, 2 * C), {C, P, P});
  tp.xz = reshape(channels(out, 2 * C, 3 * C), {C, P, P});
  return tp;
}

void SynthesisNetwork::collect(ParamMap& pm, const std::string& prefix) const {
  stem_.collect(pm, prefix + ".stem");
  for (size_t i = 0; i < ups_.size(); ++i)
    ups_[i].collect(pm, prefix + ".up" + std::to_string(i));
  head_.collect(pm, prefix + ".head");
}

Tensor lookup(const TriPlane& planes, const Tensor& x, const Tensor& y,
              const Tensor& z, int* clamped_count) {
  int c0 = 0, c1 = 0, c2 = 0;
  Tensor fxy = grid_lookup(planes.xy, x, y, &c0);
  Tensor fyz = grid_lookup(planes.yz, y, z, &c1);
  Tensor fxz = grid_lookup(planes.xz, x, z, &c2);
  if (clamped_count) *clamped_count = std::max({c0, c1, c2});
  return mul(add(add(fxy, fyz), fxz), 1.0 / 3.0);
}

SceneDecoder::SceneDecoder(int c_feat, int hidden, Rng& rng) {
  l1_ = Linear::create(c_feat, hidden, rng);
  l2_ = Linear::create(hidden, 4, rng);
}

Tensor SceneDecoder::forward(const Tensor& features) const {
  Tensor h = leaky_relu(l1_.forward(features));
  Tensor raw = l2_.forward(h);  // (N,4)
  const int n = raw.dim(0);
  Tensor rgb = sigmoid(cols(raw, 0, 3));
  Tensor sigma = softplus(add(reshape(col(raw, 3), {n, 1}), density_bias_));
  return concat_cols(rgb, sigma);
}

void SceneDecoder::collect(ParamMap& pm, const std::string& prefix) const {
  l1_.collect(pm, prefix + ".l1");
  l2_.collect(pm, prefix + ".l2");
}

}  // namespace gp3
