#include "gp3/adversary.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace gp3 {

namespace {

int conv_out(int h) { return (h - 1) / 2 + 1; }  // k3 s2 p1

Tensor spatial_mean(const Tensor& x) {  // (B,C,H,W) -> (B,C)
  const int B = x.dim(0), C = x.dim(1), hw = x.dim(2) * x.dim(3);
  return mul(sum_lastdim(reshape(x, {B * C, hw})), 1.0 / hw);
}

}  // namespace

TeacherExtractor::TeacherExtractor(int feat_dim, Rng& rng)
    : feat_dim_(feat_dim) {
  convs_[0] = Conv2dLayer::create(3, 16, 3, 2, 1, rng);
  convs_[1] = Conv2dLayer::create(16, 16, 3, 2, 1, rng);
  convs_[2] = Conv2dLayer::create(16, 16, 3, 2, 1, rng);
  head_ = Linear::create(16, feat_dim, rng);
  // Freeze: the teacher never learns.
  ParamMap pm;
  for (auto& c : convs_) c.collect(pm, "t");
  head_.collect(pm, "t");
  for (auto& [n, t] : pm.items) t.set_requires_grad(false);
}

Tensor TeacherExtractor::forward(const Tensor& rgb) const {
  if (rgb.ndim() != 4 || rgb.dim(1) != 3)
    throw Error("TeacherExtractor: input must be (B,3,h,w)");
  Tensor h = rgb.detach();
  for (const auto& c : convs_) h = leaky_relu(c.forward(h));
  Tensor pooled = reshape(spatial_mean(h), {rgb.dim(0), 16});
  return head_.forward(pooled);
}

std::vector<std::vector<double>> TeacherExtractor::weights_snapshot() const {
  ParamMap pm;
  for (const auto& c : convs_) c.collect(pm, "t");
  head_.collect(pm, "t");
  std::vector<std::vector<double>> out;
  for (const auto& [n, t] : pm.items) out.push_back(t.values());
  return out;
}

namespace {
constexpr char kFeatMagic[8] = {'G', 'P', '3', 'F', 'E', 'A', 'T', '1'};
}

void write_feature_file(const std::string& path,
                        const std::vector<std::vector<double>>& feats) {
  if (feats.empty()) throw Error("write_feature_file: empty feature set");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_feature_file: cannot open " + path);
  os.write(kFeatMagic, 8);
  const std::uint32_t count = feats.size(), dim = feats[0].size();
  os.write(reinterpret_cast<const char*>(&count), 4);
  os.write(reinterpret_cast<const char*>(&dim), 4);
  for (const auto& f : feats) {
    if (f.size() != dim) throw Error("write_feature_file: ragged features");
    os.write(reinterpret_cast<const char*>(f.data()), dim * sizeof(double));
  }
}

std::vector<std::vector<double>> read_feature_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_feature_file: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kFeatMagic, 8) != 0)
    throw Error("read_feature_file: bad magic in " + path);
  std::uint32_t count, dim;
  is.read(reinterpret_cast<char*>(&count), 4);
  is.read(reinterpret_cast<char*>(&dim), 4);
  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  for (auto& f : out) {
    is.read(reinterpret_cast<char*>(f.data()), dim * sizeof(double));
    if (!is) throw Error("read_feature_file: truncated file " + path);
  }
  return out;
}

Discriminator::Discriminator(int in_channels, int n_classes, int feat_dim,
                             int base_ch, int patch_res, Rng& rng)
    : in_channels_(in_channels), n_classes_(n_classes), feat_dim_(feat_dim) {
  convs_[0] = Conv2dLayer::create(in_channels + 3, base_ch, 3, 2, 1, rng);
  convs_[1] = Conv2dLayer::create(base_ch, base_ch * 2, 3, 2, 1, rng);
  convs_[2] = Conv2dLayer::create(base_ch * 2, base_ch * 2, 3, 2, 1, rng);
  const int hs = conv_out(conv_out(conv_out(patch_res)));
  const int flat = base_ch * 2 * hs * hs;
  const int trunk_dim = 64;
  trunk_ = Linear::create(flat, trunk_dim, rng);
  score_head_ = Linear::create(trunk_dim, 1, rng);
  feat_head_ = Linear::create(trunk_dim, feat_dim, rng);
  class_embed_ = Tensor::zeros({n_classes, trunk_dim});
  for (auto& v : class_embed_.mutable_values())
    v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(trunk_dim)));
  class_embed_.set_requires_grad(true);
}

Discriminator::Out Discriminator::forward(
    const Tensor& rgbd, const std::vector<int>& classes,
    const std::vector<std::array<double, 3>>& psi) const {
  if (rgbd.ndim() != 4)
    throw Error("Discriminator: input must be (B,C,h,w)");
  const int B = rgbd.dim(0), C = rgbd.dim(1), H = rgbd.dim(2), W = rgbd.dim(3);
  if (C != in_channels_)
    throw Error("Discriminator: expected " + std::to_string(in_channels_) +
                " input channels, got " + std::to_string(C));
  if (static_cast<int>(classes.size()) != B ||
      static_cast<int>(psi.size()) != B)
    throw Error("Discriminator: conditioning batch size mismatch");
  for (double v : rgbd.values())
    if (!std::isfinite(v)) throw Error("Discriminator: non-finite input");

  // Patch parameters as constant channels.
  std::vector<double> psi_vals(static_cast<size_t>(B) * 3 * H * W);
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < 3; ++k)
      std::fill_n(psi_vals.begin() + (static_cast<size_t>(b) * 3 + k) * H * W,
                  H * W, psi[b][k]);
  Tensor psi_t = Tensor::from({B, 3, H, W}, std::move(psi_vals));

  Tensor h = concat_channels(rgbd, psi_t);
  for (const auto& c : convs_) h = leaky_relu(c.forward(h));
  Tensor flat = reshape(h, {B, h.size() / B});
  Tensor trunk = leaky_relu(trunk_.forward(flat));  // (B, trunk_dim)

  Tensor base_score = col(score_head_.forward(trunk), 0);  // (B)
  std::vector<Tensor> embed_rows;
  embed_rows.reserve(B);
  for (int b = 0; b < B; ++b) {
    if (classes[b] < 0 || classes[b] >= n_classes_)
      throw Error("Discriminator: class index out of range");
    embed_rows.push_back(row(class_embed_, classes[b]));
  }
  Tensor proj = sum_lastdim(mul(stack_rows(embed_rows), trunk));  // (B)

  Out out;
  out.score = add(base_score, proj);
  out.feat = feat_head_.forward(trunk);
  return out;
}

void Discriminator::collect(ParamMap& pm, const std::string& prefix) const {
  for (int i = 0; i < 3; ++i)
    convs_[i].collect(pm, prefix + ".conv" + std::to_string(i));
  trunk_.collect(pm, prefix + ".trunk");
  score_head_.collect(pm, prefix + ".score");
  feat_head_.collect(pm, prefix + ".feat");
  pm.add(prefix + ".class_embed", class_embed_);
}

Tensor adv_loss_gen(const Tensor& fake_scores) {
  return mean(softplus(neg(fake_scores)));
}

Tensor adv_loss_disc(const Tensor& real_scores, const Tensor& fake_scores) {
  return add(mean(softplus(neg(real_scores))), mean(softplus(fake_scores)));
}

namespace {

// Batch input-gradients of the score, detached. (B,C,H,W) layout. The
// discriminator parameters are frozen for the probe so its backward pass
// cannot leak score gradients into their accumulators.
std::vector<double> score_input_grad(
    const Discriminator& d, const Tensor& rgbd, const std::vector<int>& classes,
    const std::vector<std::array<double, 3>>& psi) {
  ParamMap pm;
  d.collect(pm, "d");
  ParamFreeze freeze(pm);
  Tensor x = rgbd.detach();
  x.set_requires_grad(true);
  Discriminator::Out out = d.forward(x, classes, psi);
  sum(out.score).backward();
  return x.grad();
}

}  // namespace

double r1_penalty_value(const Discriminator& d, const Tensor& rgbd,
                        const std::vector<int>& classes,
                        const std::vector<std::array<double, 3>>& psi) {
  const auto g = score_input_grad(d, rgbd, classes, psi);
  const int B = rgbd.dim(0);
  const size_t per = g.size() / B;
  double total = 0.0;
  for (int b = 0; b < B; ++b) {
    double n2 = 0.0;
    for (size_t i = 0; i < per; ++i) {
      const double v = g[b * per + i];
      n2 += v * v;
    }
    total += 0.5 * n2;
  }
  return total / B;
}

Tensor r1_surrogate(const Discriminator& d, const Tensor& rgbd,
                    const std::vector<int>& classes,
                    const std::vector<std::array<double, 3>>& psi,
                    double fd_step) {
  const auto g = score_input_grad(d, rgbd, classes, psi);
  const int B = rgbd.dim(0);
  const size_t per = g.size() / B;

  std::vector<double> plus = rgbd.values(), minus = rgbd.values();
  std::vector<double> inv2e(B);
  for (int b = 0; b < B; ++b) {
    double n2 = 0.0;
    for (size_t i = 0; i < per; ++i) n2 += g[b * per + i] * g[b * per + i];
    const double eps = fd_step / (std::sqrt(n2) + 1e-12);
    inv2e[b] = 1.0 / (2.0 * eps);
    for (size_t i = 0; i < per; ++i) {
      plus[b * per + i] += eps * g[b * per + i];
      minus[b * per + i] -= eps * g[b * per + i];
    }
  }
  Tensor xp = Tensor::from(rgbd.shape(), std::move(plus));
  Tensor xm = Tensor::from(rgbd.shape(), std::move(minus));
  Tensor sp = d.forward(xp, classes, psi).score;
  Tensor sm = d.forward(xm, classes, psi).score;
  Tensor w = Tensor::from({B}, inv2e);
  // Per sample the FD term approximates g^T grad_x s with g held constant;
  // its parameter gradient is d2s/dx dtheta . g, which is exactly the
  // parameter gradient of 0.5*||grad_x s||^2. No extra factor is needed.
  return mean(mul(sub(sp, sm), w));
}

Tensor distill_loss(const Tensor& teacher_feats, const Tensor& disc_feats) {
  if (teacher_feats.shape() != disc_feats.shape())
    throw Error("distill_loss: feature dimension mismatch");
  if (teacher_feats.size() == 0) return Tensor::scalar(0.0);
  return mean(sum_lastdim(square(sub(teacher_feats, disc_feats))));
}

double generator_loss(double adv, const std::array<double, 6>& cam_losses,
                      const LossWeights& w) {
  double total = adv;
  const auto lambdas = w.per_camera_param();
  for (int i = 0; i < 6; ++i) total += lambdas[i] * cam_losses[i];
  return total;
}

double discriminator_loss(double adv, double dist, double r1,
                          const LossWeights& w) {
  return adv + w.dist * dist + w.r1 * r1;
}

}  // namespace gp3
