#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gp3/rng.hpp"
#include "gp3/tensor.hpp"

namespace gp3 {

/// Flat list of named parameter tensors. Names are stable across runs and key
/// checkpoint entries and optimizer slots.
struct ParamMap {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(const std::string& name, const Tensor& t) {
    items.emplace_back(name, t);
  }
  void merge(const ParamMap& other, const std::string& prefix) {
    for (const auto& [n, t] : other.items) items.emplace_back(prefix + n, t);
  }
  Tensor find(const std::string& name) const;
};

/// Scoped requires_grad suppression: probe passes (penalty slopes, input
/// gradients) backward through module graphs without touching parameter
/// grads. Restores the original flags on destruction.
class ParamFreeze {
 public:
  explicit ParamFreeze(const ParamMap& pm);
  ~ParamFreeze();
  ParamFreeze(const ParamFreeze&) = delete;
  ParamFreeze& operator=(const ParamFreeze&) = delete;

 private:
  std::vector<std::pair<std::shared_ptr<Tensor::Impl>, bool>> saved_;
};

struct Linear {
  Tensor W;  // (in, out)
  Tensor b;  // (out)

  static Linear create(int in, int out, Rng& rng, double gain = 1.0);
  Tensor forward(const Tensor& x) const;  // (N,in) -> (N,out)
  void collect(ParamMap& pm, const std::string& prefix) const;
};

struct Conv2dLayer {
  Tensor W;  // (Cout, Cin, k, k)
  Tensor b;  // (Cout)
  int stride = 1;
  int pad = 0;

  static Conv2dLayer create(int cin, int cout, int k, int stride, int pad,
                            Rng& rng, double gain = 1.0);
  Tensor forward(const Tensor& x) const;
  void collect(ParamMap& pm, const std::string& prefix) const;
};

struct ConvT2dLayer {
  Tensor W;  // (Cin, Cout, k, k)
  Tensor b;  // (Cout)
  int stride = 2;
  int pad = 1;

  static ConvT2dLayer create(int cin, int cout, int k, int stride, int pad,
                             Rng& rng, double gain = 1.0);
  Tensor forward(const Tensor& x) const;
  void collect(ParamMap& pm, const std::string& prefix) const;
};

/// Adam over a ParamMap. One slot per parameter, matched by position.
class AdamOpt {
 public:
  AdamOpt() = default;
  AdamOpt(const ParamMap& params, double lr, double beta1 = 0.0,
          double beta2 = 0.99, double eps = 1e-8);

  void zero_grad();
  /// Applies one update from the accumulated grads. Throws on NaN.
  void step();

  std::vector<AdamState>& slots() { return states_; }
  const ParamMap& params() const { return params_; }

 private:
  ParamMap params_;
  std::vector<AdamState> states_;
};

/// Exponential moving average of a ParamMap, by value.
class EmaTracker {
 public:
  EmaTracker() = default;
  EmaTracker(const ParamMap& params, double half_life_steps);

  void update();
  /// Copies the averaged values into `dst` (same layout as the tracked map).
  void write_to(const ParamMap& dst) const;

  std::vector<std::vector<double>>& shadows() { return shadow_; }
  double decay() const { return decay_; }

 private:
  ParamMap params_;
  std::vector<std::vector<double>> shadow_;
  double decay_ = 0.0;
};

}  // namespace gp3
