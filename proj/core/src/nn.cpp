#include "gp3/nn.hpp"

#include <cmath>

namespace gp3 {

Tensor ParamMap::find(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw Error("ParamMap: no parameter named " + name);
}

ParamFreeze::ParamFreeze(const ParamMap& pm) {
  for (const auto& [n, t] : pm.items) {
    auto impl = t.impl();
    saved_.emplace_back(impl, impl->requires_grad);
    impl->requires_grad = false;
  }
}

ParamFreeze::~ParamFreeze() {
  for (auto& [impl, flag] : saved_) impl->requires_grad = flag;
}

namespace {

Tensor init_tensor(const std::vector<int>& shape, int fan_in, Rng& rng,
                   double gain) {
  Tensor t = Tensor::zeros(shape);
  const double std = gain / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.mutable_values()) v = rng.normal(0.0, std);
  t.set_requires_grad(true);
  return t;
}

}  // namespace

Linear Linear::create(int in, int out, Rng& rng, double gain) {
  Linear l;
  l.W = init_tensor({in, out}, in, rng, gain);
  l.b = Tensor::zeros({out});
  l.b.set_requires_grad(true);
  return l;
}

Tensor Linear::forward(const Tensor& x) const {
  return add_rowvec(matmul(x, W), b);
}

void Linear::collect(ParamMap& pm, const std::string& prefix) const {
  pm.add(prefix + ".W", W);
  pm.add(prefix + ".b", b);
}

Conv2dLayer Conv2dLayer::create(int cin, int cout, int k, int stride, int pad,
                                Rng& rng, double gain) {
  Conv2dLayer l;
  l.W = init_tensor({cout, cin, k, k}, cin * k * k, rng, gain);
  l.b = Tensor::zeros({cout});
  l.b.set_requires_grad(true);
  l.stride = stride;
  l.pad = pad;
  return l;
}

Tensor Conv2dLayer::forward(const Tensor& x) const {
  return conv2d(x, W, b, stride, pad);
}

void Conv2dLayer::collect(ParamMap& pm, const std::string& prefix) const {
  pm.add(prefix + ".W", W);
  pm.add(prefix + ".b", b);
}

ConvT2dLayer ConvT2dLayer::create(int cin, int cout, int k, int stride, int pad,
                                  Rng& rng, double gain) {
  ConvT2dLayer l;
  l.W = init_tensor({cin, cout, k, k}, cin * k * k, rng, gain);
  l.b = Tensor::zeros({cout});
  l.b.set_requires_grad(true);
  l.stride = stride;
  l.pad = pad;
  return l;
}

Tensor ConvT2dLayer::forward(const Tensor& x) const {
  return conv_transpose2d(x, W, b, stride, pad);
}

void ConvT2dLayer::collect(ParamMap& pm, const std::string& prefix) const {
  pm.add(prefix + ".W", W);
  pm.add(prefix + ".b", b);
}

AdamOpt::AdamOpt(const ParamMap& params, double lr, double beta1, double beta2,
                 double eps)
    : params_(params) {
  states_.resize(params.items.size());
  for (auto& s : states_) {
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
  }
}

void AdamOpt::zero_grad() {
  for (auto& [n, t] : params_.items) t.zero_grad();
}

void AdamOpt::step() {
  for (size_t i = 0; i < params_.items.size(); ++i) {
    Tensor& t = params_.items[i].second;
    try {
      adam_step(t.mutable_values(), t.grad(), states_[i]);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " (parameter " +
                  params_.items[i].first + ")");
    }
  }
}

EmaTracker::EmaTracker(const ParamMap& params, double half_life_steps)
    : params_(params) {
  decay_ = std::pow(0.5, 1.0 / half_life_steps);
  for (const auto& [n, t] : params.items) shadow_.push_back(t.values());
}

void EmaTracker::update() {
  for (size_t i = 0; i < shadow_.size(); ++i) {
    const auto& v = params_.items[i].second.values();
    auto& s = shadow_[i];
    for (size_t j = 0; j < s.size(); ++j)
      s[j] = decay_ * s[j] + (1.0 - decay_) * v[j];
  }
}

void EmaTracker::write_to(const ParamMap& dst) const {
  if (dst.items.size() != shadow_.size())
    throw Error("EmaTracker: destination layout mismatch");
  for (size_t i = 0; i < shadow_.size(); ++i) {
    auto& v = const_cast<Tensor&>(dst.items[i].second).mutable_values();
    if (v.size() != shadow_[i].size())
      throw Error("EmaTracker: parameter size mismatch at " +
                  dst.items[i].first);
    v = shadow_[i];
  }
}

}  // namespace gp3
