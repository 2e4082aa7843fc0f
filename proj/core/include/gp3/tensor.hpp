#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace gp3 {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Multi-dimensional array of doubles participating in a dynamically built
/// reverse-mode graph. Copying a Tensor copies a handle; the underlying
/// storage and graph record are shared.
class Tensor {
 public:
  struct Impl {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until backward touches this node
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<Impl>> parents;
    // Reads this->grad, accumulates into parents' grad.
    std::function<void(Impl&)> backward_fn;

    int size() const {
      int n = 1;
      for (int d : shape) n *= d;
      return n;
    }
    void ensure_grad() {
      if (grad.empty()) grad.assign(values.size(), 0.0);
    }
  };

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(const std::vector<int>& shape);
  static Tensor full(const std::vector<int>& shape, double v);
  static Tensor scalar(double v);
  static Tensor from(const std::vector<int>& shape, std::vector<double> data);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int size() const { return impl_->size(); }
  int dim(int i) const { return impl_->shape[i]; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }

  const std::vector<double>& values() const { return impl_->values; }
  std::vector<double>& mutable_values() { return impl_->values; }
  const std::vector<double>& grad() const;

  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    impl_->requires_grad = b;
    return *this;
  }

  /// Same storage, severed from the graph. Gradient never reaches it.
  Tensor detach() const;

  void zero_grad() { impl_->grad.assign(impl_->values.size(), 0.0); }

  /// Reverse pass from a scalar. Leaf grads accumulate across calls;
  /// interior grads are reset per call.
  void backward() const;

  std::shared_ptr<Impl> impl() const { return impl_; }

 private:
  std::shared_ptr<Impl> impl_;
};

// -- graph construction helper -----------------------------------------------

/// Allocates the result node of an op. `parents` that require grad make the
/// result require grad; otherwise no graph record is kept.
Tensor make_op(std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> parents,
               std::function<void(Tensor::Impl&)> backward_fn);

// -- elementwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double c);
Tensor mul(const Tensor& a, double c);
Tensor neg(const Tensor& a);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor tan(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
/// Elementwise clamp into [lo, hi]; gradient is zero outside.
Tensor clamp(const Tensor& a, const std::vector<double>& lo,
             const std::vector<double>& hi);

// -- shape / indexing --------------------------------------------------------

Tensor reshape(const Tensor& a, const std::vector<int>& shape);
Tensor at(const Tensor& a, int flat_index);            // -> scalar
Tensor col(const Tensor& a, int j);                    // (N,M) -> (N)
Tensor cols(const Tensor& a, int j0, int j1);          // (N,M) -> (N,j1-j0)
Tensor concat_cols(const Tensor& a, const Tensor& b);  // (N,A)+(N,B)->(N,A+B)
Tensor row(const Tensor& a, int i);                    // (N,M) -> (M)
Tensor concat(const Tensor& a, const Tensor& b);       // flat concat -> 1-D
Tensor stack_scalars(const std::vector<Tensor>& xs);   // scalars -> (n)
Tensor stack_rows(const std::vector<Tensor>& xs);      // k tensors (M) -> (k,M)

/// (B,C,H,W) channel slice [c0, c1).
Tensor channels(const Tensor& x, int c0, int c1);
/// Concatenate (B,Ca,H,W) and (B,Cb,H,W) along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// -- reductions --------------------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_lastdim(const Tensor& a);             // (...,S) -> (...)
Tensor cumsum_exclusive_lastdim(const Tensor& a);

// -- linear algebra ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);  // (N,K)x(K,M) -> (N,M)
Tensor add_rowvec(const Tensor& a, const Tensor& v);  // (N,M)+(M)

// Broadcasts with a scalar tensor / per-row vector.
Tensor scale(const Tensor& a, const Tensor& s);         // a * scalar tensor
Tensor add_scalar_t(const Tensor& a, const Tensor& s);  // a + scalar tensor
Tensor mul_colvec(const Tensor& a, const Tensor& v);    // (N,M) * (N) per row
Tensor div_colvec(const Tensor& a, const Tensor& v);    // (N,M) / (N) per row
Tensor add_colvec(const Tensor& a, const Tensor& v);    // (N,M) + (N) per row

// -- structured ops ----------------------------------------------------------

/// Bilinear lookup into one feature plane. plane (C,P,P); u,v (N) in [-1,1]
/// (clamped outside, clamp kills the coordinate gradient). Result (N,C).
/// Grid convention: u indexes the second plane axis, v the third; node j sits
/// at -1 + 2*j/(P-1).
Tensor grid_lookup(const Tensor& plane, const Tensor& u, const Tensor& v,
                   int* clamped_count = nullptr);

/// (B,Cin,H,W) * (Cout,Cin,k,k) + (Cout), zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);

/// Transposed conv: (B,Cin,H,W) * (Cin,Cout,k,k) + (Cout).
/// Output spatial extent: (H-1)*stride + k - 2*pad.
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad);

/// Exact 1-D Wasserstein distance between n samples and U[lo,hi], via sorted
/// transport to the n uniform mid-quantiles lo + (hi-lo)*(i+0.5)/n.
Tensor emd_to_uniform(const Tensor& samples, double lo, double hi);

// -- validation --------------------------------------------------------------

/// Max over coordinates of |analytic - central difference| /
/// (|central difference| + 1e-8), for a scalar-valued fn of the leaf `x`.
double finite_diff_check(const std::function<Tensor(const Tensor&)>& fn,
                         Tensor& x, double step = 1e-4);

// -- optimizer ---------------------------------------------------------------

struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  long t = 0;
  double lr = 2e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// One bias-corrected Adam update, in place. Throws on NaN gradient.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state);

}  // namespace gp3
