#include "gp3/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace gp3 {

namespace {

void check(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor Tensor::zeros(const std::vector<int>& shape) {
  return full(shape, 0.0);
}

Tensor Tensor::full(const std::vector<int>& shape, double v) {
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  int n = 1;
  for (int d : shape) n *= d;
  impl->values.assign(static_cast<size_t>(n), v);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double v) { return full({}, v); }

Tensor Tensor::from(const std::vector<int>& shape, std::vector<double> data) {
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  int n = 1;
  for (int d : shape) n *= d;
  check(static_cast<size_t>(n) == data.size(),
        "Tensor::from: data size does not match shape " + shape_str(shape));
  impl->values = std::move(data);
  return Tensor(std::move(impl));
}

const std::vector<double>& Tensor::grad() const {
  impl_->ensure_grad();
  return impl_->grad;
}

double Tensor::item() const {
  check(impl_->size() == 1, "item(): tensor is not scalar, shape " +
                                shape_str(impl_->shape));
  return impl_->values[0];
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<Impl>();
  impl->shape = impl_->shape;
  impl->values = impl_->values;
  return Tensor(std::move(impl));
}

void Tensor::backward() const {
  check(impl_->size() == 1, "backward(): loss must be scalar, got shape " +
                                shape_str(impl_->shape));
  // Topological order by iterative post-order DFS.
  std::vector<Impl*> order;
  std::unordered_set<Impl*> seen;
  struct Frame {
    Impl* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({impl_.get(), 0});
  seen.insert(impl_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Impl* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  // Interior grads are scratch; leaves accumulate across calls.
  for (Impl* n : order) {
    if (!n->is_leaf)
      n->grad.assign(n->values.size(), 0.0);
    else
      n->ensure_grad();
  }
  impl_->ensure_grad();
  impl_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Impl* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

Tensor make_op(std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> parents,
               std::function<void(Tensor::Impl&)> backward_fn) {
  auto impl = std::make_shared<Tensor::Impl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  bool needs = false;
  for (const auto& p : parents)
    if (p.impl()->requires_grad) needs = true;
  if (needs) {
    impl->requires_grad = true;
    impl->is_leaf = false;
    for (auto& p : parents) impl->parents.push_back(p.impl());
    impl->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(impl));
}

// -- elementwise -------------------------------------------------------------

namespace {

using Vals = std::vector<double>;

Tensor binary_same_shape(const Tensor& a, const Tensor& b, const char* name,
                         const std::function<double(double, double)>& f,
                         // dz -> (da contribution, db contribution)
                         const std::function<void(size_t, double, const Vals&,
                                                  const Vals&, Vals*, Vals*)>&
                             back) {
  check(a.shape() == b.shape(), std::string(name) + ": shape mismatch " +
                                    shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
  const Vals& av = a.values();
  const Vals& bv = b.values();
  Vals out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  auto ai = a.impl();
  auto bi = b.impl();
  return make_op(a.shape(), std::move(out), {a, b},
                 [ai, bi, back](Tensor::Impl& self) {
                   Vals* da = nullptr;
                   Vals* db = nullptr;
                   if (ai->requires_grad) {
                     ai->ensure_grad();
                     da = &ai->grad;
                   }
                   if (bi->requires_grad) {
                     bi->ensure_grad();
                     db = &bi->grad;
                   }
                   for (size_t i = 0; i < self.grad.size(); ++i)
                     back(i, self.grad[i], ai->values, bi->values, da, db);
                 });
}

Tensor unary(const Tensor& a, const std::function<double(double)>& f,
             // derivative as function of (input, output)
             const std::function<double(double, double)>& dfdx) {
  const Vals& av = a.values();
  Vals out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  auto ai = a.impl();
  auto res = make_op(
      a.shape(), std::move(out), {a}, [ai, dfdx](Tensor::Impl& self) {
        ai->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          ai->grad[i] += self.grad[i] * dfdx(ai->values[i], self.values[i]);
      });
  return res;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "add", [](double x, double y) { return x + y; },
      [](size_t i, double g, const Vals&, const Vals&, Vals* da, Vals* db) {
        if (da) (*da)[i] += g;
        if (db) (*db)[i] += g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](size_t i, double g, const Vals&, const Vals&, Vals* da, Vals* db) {
        if (da) (*da)[i] += g;
        if (db) (*db)[i] -= g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](size_t i, double g, const Vals& av, const Vals& bv, Vals* da,
         Vals* db) {
        if (da) (*da)[i] += g * bv[i];
        if (db) (*db)[i] += g * av[i];
      });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "div", [](double x, double y) { return x / y; },
      [](size_t i, double g, const Vals& av, const Vals& bv, Vals* da,
         Vals* db) {
        if (da) (*da)[i] += g / bv[i];
        if (db) (*db)[i] -= g * av[i] / (bv[i] * bv[i]);
      });
}

Tensor add(const Tensor& a, double c) {
  return unary(
      a, [c](double x) { return x + c; },
      [](double, double) { return 1.0; });
}

Tensor mul(const Tensor& a, double c) {
  return unary(
      a, [c](double x) { return x * c; },
      [c](double, double) { return c; });
}

Tensor neg(const Tensor& a) { return mul(a, -1.0); }

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor abs(const Tensor& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor sin(const Tensor& a) {
  return unary(
      a, [](double x) { return std::sin(x); },
      [](double x, double) { return std::cos(x); });
}

Tensor cos(const Tensor& a) {
  return unary(
      a, [](double x) { return std::cos(x); },
      [](double x, double) { return -std::sin(x); });
}

Tensor tan(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tan(x); },
      [](double, double y) { return 1.0 + y * y; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return stable_sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, [](double x) { return stable_softplus(x); },
      [](double x, double) { return stable_sigmoid(x); });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary(
      a, [slope](double x) { return x >= 0 ? x : slope * x; },
      [slope](double x, double) { return x >= 0 ? 1.0 : slope; });
}

Tensor clamp(const Tensor& a, const std::vector<double>& lo,
             const std::vector<double>& hi) {
  const int n = a.size();
  check(static_cast<int>(lo.size()) == n && static_cast<int>(hi.size()) == n,
        "clamp: bound size mismatch");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    check(lo[i] <= hi[i], "clamp: lo > hi");
    out[i] = std::min(std::max(a.values()[i], lo[i]), hi[i]);
  }
  auto ai = a.impl();
  return make_op(a.shape(), std::move(out), {a},
                 [ai, lo, hi](Tensor::Impl& self) {
                   ai->ensure_grad();
                   for (size_t i = 0; i < self.grad.size(); ++i)
                     if (ai->values[i] > lo[i] && ai->values[i] < hi[i])
                       ai->grad[i] += self.grad[i];
                 });
}

// -- shape / indexing --------------------------------------------------------

Tensor reshape(const Tensor& a, const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  check(n == a.size(), "reshape: size mismatch");
  auto ai = a.impl();
  return make_op(shape, a.values(), {a}, [ai](Tensor::Impl& self) {
    ai->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i];
  });
}

Tensor at(const Tensor& a, int flat_index) {
  check(flat_index >= 0 && flat_index < a.size(), "at: index out of range");
  auto ai = a.impl();
  return make_op({}, {a.values()[flat_index]}, {a},
                 [ai, flat_index](Tensor::Impl& self) {
                   ai->ensure_grad();
                   ai->grad[flat_index] += self.grad[0];
                 });
}

Tensor col(const Tensor& a, int j) {
  check(a.ndim() == 2, "col: expected 2-D tensor");
  const int n = a.dim(0), m = a.dim(1);
  check(j >= 0 && j < m, "col: index out of range");
  Vals out(n);
  for (int i = 0; i < n; ++i) out[i] = a.values()[i * m + j];
  auto ai = a.impl();
  return make_op({n}, std::move(out), {a}, [ai, j, n, m](Tensor::Impl& self) {
    ai->ensure_grad();
    for (int i = 0; i < n; ++i) ai->grad[i * m + j] += self.grad[i];
  });
}

Tensor cols(const Tensor& a, int j0, int j1) {
  check(a.ndim() == 2, "cols: expected 2-D tensor");
  const int n = a.dim(0), m = a.dim(1);
  check(0 <= j0 && j0 < j1 && j1 <= m, "cols: bad range");
  const int k = j1 - j0;
  Vals out(static_cast<size_t>(n) * k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) out[i * k + j] = a.values()[i * m + j0 + j];
  auto ai = a.impl();
  return make_op({n, k}, std::move(out), {a},
                 [ai, n, m, j0, k](Tensor::Impl& self) {
                   ai->ensure_grad();
                   for (int i = 0; i < n; ++i)
                     for (int j = 0; j < k; ++j)
                       ai->grad[i * m + j0 + j] += self.grad[i * k + j];
                 });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check(a.ndim() == 2 && b.ndim() == 2 && a.dim(0) == b.dim(0),
        "concat_cols: shape mismatch");
  const int n = a.dim(0), ma = a.dim(1), mb = b.dim(1), m = ma + mb;
  Vals out(static_cast<size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.values().begin() + static_cast<size_t>(i) * ma, ma,
                out.begin() + static_cast<size_t>(i) * m);
    std::copy_n(b.values().begin() + static_cast<size_t>(i) * mb, mb,
                out.begin() + static_cast<size_t>(i) * m + ma);
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return make_op({n, m}, std::move(out), {a, b},
                 [ai, bi, n, ma, mb, m](Tensor::Impl& self) {
                   for (int i = 0; i < n; ++i) {
                     if (ai->requires_grad) {
                       ai->ensure_grad();
                       for (int j = 0; j < ma; ++j)
                         ai->grad[i * ma + j] += self.grad[i * m + j];
                     }
                     if (bi->requires_grad) {
                       bi->ensure_grad();
                       for (int j = 0; j < mb; ++j)
                         bi->grad[i * mb + j] += self.grad[i * m + ma + j];
                     }
                   }
                 });
}

Tensor row(const Tensor& a, int i) {
  check(a.ndim() == 2, "row: expected 2-D tensor");
  const int n = a.dim(0), m = a.dim(1);
  check(i >= 0 && i < n, "row: index out of range");
  Vals out(a.values().begin() + static_cast<size_t>(i) * m,
           a.values().begin() + static_cast<size_t>(i + 1) * m);
  auto ai = a.impl();
  return make_op({m}, std::move(out), {a}, [ai, i, m](Tensor::Impl& self) {
    ai->ensure_grad();
    for (int j = 0; j < m; ++j) ai->grad[i * m + j] += self.grad[j];
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  Vals out = a.values();
  out.insert(out.end(), b.values().begin(), b.values().end());
  const int na = a.size();
  auto ai = a.impl();
  auto bi = b.impl();
  return make_op({na + b.size()}, std::move(out), {a, b},
                 [ai, bi, na](Tensor::Impl& self) {
                   if (ai->requires_grad) {
                     ai->ensure_grad();
                     for (int i = 0; i < na; ++i) ai->grad[i] += self.grad[i];
                   }
                   if (bi->requires_grad) {
                     bi->ensure_grad();
                     for (size_t i = na; i < self.grad.size(); ++i)
                       bi->grad[i - na] += self.grad[i];
                   }
                 });
}

Tensor stack_scalars(const std::vector<Tensor>& xs) {
  Vals out;
  out.reserve(xs.size());
  std::vector<Tensor> parents;
  for (const auto& x : xs) {
    check(x.size() == 1, "stack_scalars: non-scalar element");
    out.push_back(x.values()[0]);
    parents.push_back(x);
  }
  std::vector<std::shared_ptr<Tensor::Impl>> impls;
  for (const auto& x : xs) impls.push_back(x.impl());
  return make_op({static_cast<int>(xs.size())}, std::move(out), parents,
                 [impls](Tensor::Impl& self) {
                   for (size_t i = 0; i < impls.size(); ++i) {
                     if (!impls[i]->requires_grad) continue;
                     impls[i]->ensure_grad();
                     impls[i]->grad[0] += self.grad[i];
                   }
                 });
}

Tensor stack_rows(const std::vector<Tensor>& xs) {
  check(!xs.empty(), "stack_rows: empty");
  const int m = xs[0].size();
  Vals out;
  std::vector<Tensor> parents;
  for (const auto& x : xs) {
    check(x.size() == m, "stack_rows: ragged rows");
    out.insert(out.end(), x.values().begin(), x.values().end());
    parents.push_back(x);
  }
  std::vector<std::shared_ptr<Tensor::Impl>> impls;
  for (const auto& x : xs) impls.push_back(x.impl());
  return make_op({static_cast<int>(xs.size()), m}, std::move(out), parents,
                 [impls, m](Tensor::Impl& self) {
                   for (size_t i = 0; i < impls.size(); ++i) {
                     if (!impls[i]->requires_grad) continue;
                     impls[i]->ensure_grad();
                     for (int j = 0; j < m; ++j)
                       impls[i]->grad[j] += self.grad[i * m + j];
                   }
                 });
}

Tensor channels(const Tensor& x, int c0, int c1) {
  check(x.ndim() == 4, "channels: expected (B,C,H,W)");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  check(0 <= c0 && c0 < c1 && c1 <= C, "channels: bad range");
  const int Cs = c1 - c0, hw = H * W;
  Vals out(static_cast<size_t>(B) * Cs * hw);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < Cs; ++c)
      std::copy_n(x.values().begin() + ((b * C + c0 + c) * hw), hw,
                  out.begin() + ((b * Cs + c) * hw));
  auto xi = x.impl();
  return make_op({B, Cs, H, W}, std::move(out), {x},
                 [xi, B, C, c0, Cs, hw](Tensor::Impl& self) {
                   xi->ensure_grad();
                   for (int b = 0; b < B; ++b)
                     for (int c = 0; c < Cs; ++c)
                       for (int i = 0; i < hw; ++i)
                         xi->grad[(b * C + c0 + c) * hw + i] +=
                             self.grad[(b * Cs + c) * hw + i];
                 });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  check(a.ndim() == 4 && b.ndim() == 4, "concat_channels: expected (B,C,H,W)");
  const int B = a.dim(0), Ca = a.dim(1), H = a.dim(2), W = a.dim(3);
  const int Cb = b.dim(1);
  check(b.dim(0) == B && b.dim(2) == H && b.dim(3) == W,
        "concat_channels: shape mismatch");
  const int C = Ca + Cb, hw = H * W;
  Vals out(static_cast<size_t>(B) * C * hw);
  for (int bb = 0; bb < B; ++bb) {
    std::copy_n(a.values().begin() + static_cast<size_t>(bb) * Ca * hw,
                Ca * hw, out.begin() + static_cast<size_t>(bb) * C * hw);
    std::copy_n(b.values().begin() + static_cast<size_t>(bb) * Cb * hw,
                Cb * hw,
                out.begin() + static_cast<size_t>(bb) * C * hw + Ca * hw);
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return make_op({B, C, H, W}, std::move(out), {a, b},
                 [ai, bi, B, Ca, Cb, C, hw](Tensor::Impl& self) {
                   for (int bb = 0; bb < B; ++bb) {
                     if (ai->requires_grad) {
                       ai->ensure_grad();
                       for (int i = 0; i < Ca * hw; ++i)
                         ai->grad[bb * Ca * hw + i] +=
                             self.grad[bb * C * hw + i];
                     }
                     if (bi->requires_grad) {
                       bi->ensure_grad();
                       for (int i = 0; i < Cb * hw; ++i)
                         bi->grad[bb * Cb * hw + i] +=
                             self.grad[bb * C * hw + Ca * hw + i];
                     }
                   }
                 });
}

// -- reductions --------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = std::accumulate(a.values().begin(), a.values().end(), 0.0);
  auto ai = a.impl();
  return make_op({}, {s}, {a}, [ai](Tensor::Impl& self) {
    ai->ensure_grad();
    for (auto& g : ai->grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.size());
  double s = std::accumulate(a.values().begin(), a.values().end(), 0.0);
  auto ai = a.impl();
  return make_op({}, {s / n}, {a}, [ai, n](Tensor::Impl& self) {
    ai->ensure_grad();
    const double g = self.grad[0] / n;
    for (auto& gg : ai->grad) gg += g;
  });
}

Tensor sum_lastdim(const Tensor& a) {
  check(a.ndim() >= 1, "sum_lastdim: needs at least 1 dim");
  const int s = a.dim(a.ndim() - 1);
  const int rows = a.size() / s;
  std::vector<int> shape(a.shape().begin(), a.shape().end() - 1);
  Vals out(rows, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < s; ++j) out[r] += a.values()[r * s + j];
  auto ai = a.impl();
  return make_op(shape, std::move(out), {a},
                 [ai, rows, s](Tensor::Impl& self) {
                   ai->ensure_grad();
                   for (int r = 0; r < rows; ++r)
                     for (int j = 0; j < s; ++j)
                       ai->grad[r * s + j] += self.grad[r];
                 });
}

Tensor cumsum_exclusive_lastdim(const Tensor& a) {
  const int s = a.dim(a.ndim() - 1);
  const int rows = a.size() / s;
  Vals out(a.values().size());
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int j = 0; j < s; ++j) {
      out[r * s + j] = acc;
      acc += a.values()[r * s + j];
    }
  }
  auto ai = a.impl();
  return make_op(a.shape(), std::move(out), {a},
                 [ai, rows, s](Tensor::Impl& self) {
                   ai->ensure_grad();
                   for (int r = 0; r < rows; ++r) {
                     double acc = 0.0;
                     for (int j = s - 1; j >= 0; --j) {
                       ai->grad[r * s + j] += acc;
                       acc += self.grad[r * s + j];
                     }
                   }
                 });
}

// -- linear algebra ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.ndim() == 2 && b.ndim() == 2, "matmul: expected 2-D tensors");
  const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  check(b.dim(0) == k, "matmul: inner dim mismatch " + shape_str(a.shape()) +
                           " x " + shape_str(b.shape()));
  Vals out(static_cast<size_t>(n) * m, 0.0);
  const Vals& av = a.values();
  const Vals& bv = b.values();
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + static_cast<size_t>(p) * m;
      double* orow = out.data() + static_cast<size_t>(i) * m;
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  auto ai = a.impl();
  auto bi = b.impl();
  return make_op({n, m}, std::move(out), {a, b},
                 [ai, bi, n, k, m](Tensor::Impl& self) {
                   const Vals& g = self.grad;
                   if (ai->requires_grad) {
                     ai->ensure_grad();
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < m; ++j) {
                         const double gij = g[i * m + j];
                         if (gij == 0.0) continue;
                         for (int p = 0; p < k; ++p)
                           ai->grad[i * k + p] += gij * bi->values[p * m + j];
                       }
                   }
                   if (bi->requires_grad) {
                     bi->ensure_grad();
                     for (int i = 0; i < n; ++i)
                       for (int p = 0; p < k; ++p) {
                         const double aip = ai->values[i * k + p];
                         if (aip == 0.0) continue;
                         for (int j = 0; j < m; ++j)
                           bi->grad[p * m + j] += aip * g[i * m + j];
                       }
                   }
                 });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  check(a.ndim() == 2 && v.ndim() == 1 && a.dim(1) == v.dim(0),
        "add_rowvec: shape mismatch");
  const int n = a.dim(0), m = a.dim(1);
  Vals out(a.values());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[i * m + j] += v.values()[j];
  auto ai = a.impl();
  auto vi = v.impl();
  return make_op({n, m}, std::move(out), {a, v},
                 [ai, vi, n, m](Tensor::Impl& self) {
                   if (ai->requires_grad) {
                     ai->ensure_grad();
                     for (size_t i = 0; i < self.grad.size(); ++i)
                       ai->grad[i] += self.grad[i];
                   }
                   if (vi->requires_grad) {
                     vi->ensure_grad();
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < m; ++j)
                         vi->grad[j] += self.grad[i * m + j];
                   }
                 });
}

Tensor scale(const Tensor& a, const Tensor& s) {
  check(s.size() == 1, "scale: s must be scalar");
  const double sv = s.values()[0];
  Vals out(a.values());
  for (auto& x : out) x *= sv;
  auto ai = a.impl();
  auto si = s.impl();
  return make_op(a.shape(), std::move(out), {a, s},
                 [ai, si](Tensor::Impl& self) {
                   if (ai->requires_grad) {
                     ai->ensure_grad();
                     const double sv2 = si->values[0];
                     for (size_t i = 0; i < self.grad.size(); ++i)
                       ai->grad[i] += self.grad[i] * sv2;
                   }
                   if (si->requires_grad) {
                     si->ensure_grad();
                     double acc = 0.0;
                     for (size_t i = 0; i < self.grad.size(); ++i)
                       acc += self.grad[i] * ai->values[i];
                     si->grad[0] += acc;
                   }
                 });
}

Tensor add_scalar_t(const Tensor& a, const Tensor& s) {
  check(s.size() == 1, "add_scalar_t: s must be scalar");
  Vals out(a.values());
  for (auto& x : out) x += s.values()[0];
  auto ai = a.impl();
  auto si = s.impl();
  return make_op(a.shape(), std::move(out), {a, s},
                 [ai, si](Tensor::Impl& self) {
                   if (ai->requires_grad) {
                     ai->ensure_grad();
                     for (size_t i = 0; i < self.grad.size(); ++i)
                       ai->grad[i] += self.grad[i];
                   }
                   if (si->requires_grad) {
                     si->ensure_grad();
                     double acc = 0.0;
                     for (double g : self.grad) acc += g;
                     si->grad[0] += acc;
                   }
                 });
}

namespace {

Tensor colvec_broadcast(const Tensor& a, const Tensor& v, bool divide) {
  check(a.ndim() == 2 && v.ndim() == 1 && a.dim(0) == v.dim(0),
        "colvec broadcast: shape mismatch");
  const int n = a.dim(0), m = a.dim(1);
  Vals out(a.values());
  for (int i = 0; i < n; ++i) {
    const double f = divide ? 1.0 / v.values()[i] : v.values()[i];
    for (int j = 0; j < m; ++j) out[i * m + j] *= f;
  }
  auto ai = a.impl();
  auto vi = v.impl();
  return make_op(
      {n, m}, std::move(out), {a, v},
      [ai, vi, n, m, divide](Tensor::Impl& self) {
        for (int i = 0; i < n; ++i) {
          const double vv = vi->values[i];
          const double f = divide ? 1.0 / vv : vv;
          double dv = 0.0;
          for (int j = 0; j < m; ++j) {
            const double g = self.grad[i * m + j];
            if (ai->requires_grad) {
              ai->ensure_grad();
              ai->grad[i * m + j] += g * f;
            }
            if (vi->requires_grad) {
              dv += divide ? -g * ai->values[i * m + j] / (vv * vv)
                           : g * ai->values[i * m + j];
            }
          }
          if (vi->requires_grad) {
            vi->ensure_grad();
            vi->grad[i] += dv;
          }
        }
      });
}

}  // namespace

Tensor mul_colvec(const Tensor& a, const Tensor& v) {
  return colvec_broadcast(a, v, false);
}

Tensor div_colvec(const Tensor& a, const Tensor& v) {
  return colvec_broadcast(a, v, true);
}

Tensor add_colvec(const Tensor& a, const Tensor& v) {
  check(a.ndim() == 2 && v.ndim() == 1 && a.dim(0) == v.dim(0),
        "add_colvec: shape mismatch");
  const int n = a.dim(0), m = a.dim(1);
  Vals out(a.values());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[i * m + j] += v.values()[i];
  auto ai = a.impl();
  auto vi = v.impl();
  return make_op({n, m}, std::move(out), {a, v},
                 [ai, vi, n, m](Tensor::Impl& self) {
                   if (ai->requires_grad) {
                     ai->ensure_grad();
                     for (size_t i = 0; i < self.grad.size(); ++i)
                       ai->grad[i] += self.grad[i];
                   }
                   if (vi->requires_grad) {
                     vi->ensure_grad();
                     for (int i = 0; i < n; ++i) {
                       double acc = 0.0;
                       for (int j = 0; j < m; ++j) acc += self.grad[i * m + j];
                       vi->grad[i] += acc;
                     }
                   }
                 });
}

// -- structured ops ----------------------------------------------------------

Tensor grid_lookup(const Tensor& plane, const Tensor& u, const Tensor& v,
                   int* clamped_count) {
  check(plane.ndim() == 3 && plane.dim(1) == plane.dim(2),
        "grid_lookup: plane must be (C,P,P)");
  check(u.ndim() == 1 && v.ndim() == 1 && u.dim(0) == v.dim(0),
        "grid_lookup: u,v must be equal-length 1-D");
  const int C = plane.dim(0), P = plane.dim(1), N = u.dim(0);
  const double half = 0.5 * (P - 1);

  struct Cell {
    int i0, i1, j0, j1;
    double fu, fv;
    bool clamped_u, clamped_v;
  };
  std::vector<Cell> cells(N);
  int nclamped = 0;
  for (int n = 0; n < N; ++n) {
    double uu = u.values()[n], vv = v.values()[n];
    Cell& c = cells[n];
    c.clamped_u = uu < -1.0 || uu > 1.0;
    c.clamped_v = vv < -1.0 || vv > 1.0;
    if (c.clamped_u || c.clamped_v) ++nclamped;
    uu = std::clamp(uu, -1.0, 1.0);
    vv = std::clamp(vv, -1.0, 1.0);
    const double gu = (uu + 1.0) * half;
    const double gv = (vv + 1.0) * half;
    c.i0 = std::min(static_cast<int>(gu), P - 1);
    c.j0 = std::min(static_cast<int>(gv), P - 1);
    c.i1 = std::min(c.i0 + 1, P - 1);
    c.j1 = std::min(c.j0 + 1, P - 1);
    c.fu = gu - c.i0;
    c.fv = gv - c.j0;
  }
  if (clamped_count) *clamped_count = nclamped;

  Vals out(static_cast<size_t>(N) * C);
  const Vals& pv = plane.values();
  for (int n = 0; n < N; ++n) {
    const Cell& c = cells[n];
    for (int ch = 0; ch < C; ++ch) {
      const double* pl = pv.data() + static_cast<size_t>(ch) * P * P;
      const double v00 = pl[c.i0 * P + c.j0], v01 = pl[c.i0 * P + c.j1];
      const double v10 = pl[c.i1 * P + c.j0], v11 = pl[c.i1 * P + c.j1];
      out[n * C + ch] = (1 - c.fu) * ((1 - c.fv) * v00 + c.fv * v01) +
                        c.fu * ((1 - c.fv) * v10 + c.fv * v11);
    }
  }
  auto pi = plane.impl();
  auto ui = u.impl();
  auto vi = v.impl();
  return make_op(
      {N, C}, std::move(out), {plane, u, v},
      [pi, ui, vi, cells, C, P, N, half](Tensor::Impl& self) {
        const Vals& g = self.grad;
        if (pi->requires_grad) pi->ensure_grad();
        if (ui->requires_grad) ui->ensure_grad();
        if (vi->requires_grad) vi->ensure_grad();
        for (int n = 0; n < N; ++n) {
          const Cell& c = cells[n];
          double du = 0.0, dv = 0.0;
          for (int ch = 0; ch < C; ++ch) {
            const double go = g[n * C + ch];
            if (go == 0.0) continue;
            const size_t base = static_cast<size_t>(ch) * P * P;
            if (pi->requires_grad) {
              pi->grad[base + c.i0 * P + c.j0] += go * (1 - c.fu) * (1 - c.fv);
              pi->grad[base + c.i0 * P + c.j1] += go * (1 - c.fu) * c.fv;
              pi->grad[base + c.i1 * P + c.j0] += go * c.fu * (1 - c.fv);
              pi->grad[base + c.i1 * P + c.j1] += go * c.fu * c.fv;
            }
            if (ui->requires_grad || vi->requires_grad) {
              const double* pl = pi->values.data() + base;
              const double v00 = pl[c.i0 * P + c.j0];
              const double v01 = pl[c.i0 * P + c.j1];
              const double v10 = pl[c.i1 * P + c.j0];
              const double v11 = pl[c.i1 * P + c.j1];
              du += go * ((1 - c.fv) * (v10 - v00) + c.fv * (v11 - v01));
              dv += go * ((1 - c.fu) * (v01 - v00) + c.fu * (v11 - v10));
            }
          }
          // Clamped coordinates sit on a flat extension: no gradient.
          if (ui->requires_grad && !c.clamped_u) ui->grad[n] += du * half;
          if (vi->requires_grad && !c.clamped_v) vi->grad[n] += dv * half;
        }
      });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  check(x.ndim() == 4, "conv2d: input must be (B,Cin,H,W)");
  check(w.ndim() == 4, "conv2d: weight must be (Cout,Cin,k,k)");
  const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Cout = w.dim(0), k = w.dim(2);
  check(w.dim(1) == Cin, "conv2d: channel mismatch, input has " +
                             std::to_string(Cin) + " channels, weight expects " +
                             std::to_string(w.dim(1)));
  check(b.size() == Cout, "conv2d: bias size mismatch");
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  Vals out(static_cast<size_t>(B) * Cout * Ho * Wo);
  const Vals& xv = x.values();
  const Vals& wv = w.values();
  for (int bb = 0; bb < B; ++bb)
    for (int oc = 0; oc < Cout; ++oc)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          double acc = b.values()[oc];
          for (int ic = 0; ic < Cin; ++ic)
            for (int kh = 0; kh < k; ++kh) {
              const int ih = oh * stride + kh - pad;
              if (ih < 0 || ih >= H) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int iw = ow * stride + kw - pad;
                if (iw < 0 || iw >= W) continue;
                acc += xv[((bb * Cin + ic) * H + ih) * W + iw] *
                       wv[((oc * Cin + ic) * k + kh) * k + kw];
              }
            }
          out[((bb * Cout + oc) * Ho + oh) * Wo + ow] = acc;
        }
  auto xi = x.impl();
  auto wi = w.impl();
  auto bi = b.impl();
  return make_op(
      {B, Cout, Ho, Wo}, std::move(out), {x, w, b},
      [xi, wi, bi, B, Cin, H, W, Cout, k, Ho, Wo, stride,
       pad](Tensor::Impl& self) {
        const Vals& g = self.grad;
        if (xi->requires_grad) xi->ensure_grad();
        if (wi->requires_grad) wi->ensure_grad();
        if (bi->requires_grad) bi->ensure_grad();
        for (int bb = 0; bb < B; ++bb)
          for (int oc = 0; oc < Cout; ++oc)
            for (int oh = 0; oh < Ho; ++oh)
              for (int ow = 0; ow < Wo; ++ow) {
                const double go = g[((bb * Cout + oc) * Ho + oh) * Wo + ow];
                if (go == 0.0) continue;
                if (bi->requires_grad) bi->grad[oc] += go;
                for (int ic = 0; ic < Cin; ++ic)
                  for (int kh = 0; kh < k; ++kh) {
                    const int ih = oh * stride + kh - pad;
                    if (ih < 0 || ih >= H) continue;
                    for (int kw = 0; kw < k; ++kw) {
                      const int iw = ow * stride + kw - pad;
                      if (iw < 0 || iw >= W) continue;
                      const size_t xoff = ((bb * Cin + ic) * H + ih) * W + iw;
                      const size_t woff = ((oc * Cin + ic) * k + kh) * k + kw;
                      if (xi->requires_grad)
                        xi->grad[xoff] += go * wi->values[woff];
                      if (wi->requires_grad)
                        wi->grad[woff] += go * xi->values[xoff];
                    }
                  }
              }
      });
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad) {
  check(x.ndim() == 4, "conv_transpose2d: input must be (B,Cin,H,W)");
  check(w.ndim() == 4, "conv_transpose2d: weight must be (Cin,Cout,k,k)");
  const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Cout = w.dim(1), k = w.dim(2);
  check(w.dim(0) == Cin, "conv_transpose2d: channel mismatch");
  const int Ho = (H - 1) * stride + k - 2 * pad;
  const int Wo = (W - 1) * stride + k - 2 * pad;
  check(Ho > 0 && Wo > 0, "conv_transpose2d: empty output");
  Vals out(static_cast<size_t>(B) * Cout * Ho * Wo, 0.0);
  const Vals& xv = x.values();
  const Vals& wv = w.values();
  for (int bb = 0; bb < B; ++bb) {
    for (int oc = 0; oc < Cout; ++oc) {
      double* oplane = out.data() + static_cast<size_t>(bb * Cout + oc) * Ho * Wo;
      for (int i = 0; i < Ho * Wo; ++i) oplane[i] = b.values()[oc];
    }
    for (int ic = 0; ic < Cin; ++ic)
      for (int ih = 0; ih < H; ++ih)
        for (int iw = 0; iw < W; ++iw) {
          const double xval = xv[((bb * Cin + ic) * H + ih) * W + iw];
          if (xval == 0.0) continue;
          for (int oc = 0; oc < Cout; ++oc)
            for (int kh = 0; kh < k; ++kh) {
              const int oh = ih * stride + kh - pad;
              if (oh < 0 || oh >= Ho) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int ow = iw * stride + kw - pad;
                if (ow < 0 || ow >= Wo) continue;
                out[((bb * Cout + oc) * Ho + oh) * Wo + ow] +=
                    xval * wv[((ic * Cout + oc) * k + kh) * k + kw];
              }
            }
        }
  }
  auto xi = x.impl();
  auto wi = w.impl();
  auto bi = b.impl();
  return make_op(
      {B, Cout, Ho, Wo}, std::move(out), {x, w, b},
      [xi, wi, bi, B, Cin, H, W, Cout, k, Ho, Wo, stride,
       pad](Tensor::Impl& self) {
        const Vals& g = self.grad;
        if (xi->requires_grad) xi->ensure_grad();
        if (wi->requires_grad) wi->ensure_grad();
        if (bi->requires_grad) {
          bi->ensure_grad();
          for (int bb = 0; bb < B; ++bb)
            for (int oc = 0; oc < Cout; ++oc) {
              const double* gp =
                  g.data() + static_cast<size_t>(bb * Cout + oc) * Ho * Wo;
              double acc = 0.0;
              for (int i = 0; i < Ho * Wo; ++i) acc += gp[i];
              bi->grad[oc] += acc;
            }
        }
        for (int bb = 0; bb < B; ++bb)
          for (int ic = 0; ic < Cin; ++ic)
            for (int ih = 0; ih < H; ++ih)
              for (int iw = 0; iw < W; ++iw) {
                const size_t xoff = ((bb * Cin + ic) * H + ih) * W + iw;
                for (int oc = 0; oc < Cout; ++oc)
                  for (int kh = 0; kh < k; ++kh) {
                    const int oh = ih * stride + kh - pad;
                    if (oh < 0 || oh >= Ho) continue;
                    for (int kw = 0; kw < k; ++kw) {
                      const int ow = iw * stride + kw - pad;
                      if (ow < 0 || ow >= Wo) continue;
                      const double go = g[((bb * Cout + oc) * Ho + oh) * Wo + ow];
                      if (go == 0.0) continue;
                      const size_t woff = ((ic * Cout + oc) * k + kh) * k + kw;
                      if (xi->requires_grad)
                        xi->grad[xoff] += go * wi->values[woff];
                      if (wi->requires_grad)
                        wi->grad[woff] += go * xi->values[xoff];
                    }
                  }
              }
      });
}

Tensor emd_to_uniform(const Tensor& samples, double lo, double hi) {
  check(samples.ndim() == 1 && samples.dim(0) >= 2,
        "emd_to_uniform: need a 1-D tensor with >= 2 samples");
  const int n = samples.dim(0);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const Vals& sv = samples.values();
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return sv[a] < sv[b]; });
  double cost = 0.0;
  std::vector<double> sign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double q = lo + (hi - lo) * (i + 0.5) / n;
    const double diff = sv[idx[i]] - q;
    cost += std::abs(diff);
    sign[idx[i]] = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
  }
  cost /= n;
  auto si = samples.impl();
  return make_op({}, {cost}, {samples}, [si, sign, n](Tensor::Impl& self) {
    si->ensure_grad();
    for (int i = 0; i < n; ++i) si->grad[i] += self.grad[0] * sign[i] / n;
  });
}

// -- validation --------------------------------------------------------------

double finite_diff_check(const std::function<Tensor(const Tensor&)>& fn,
                         Tensor& x, double step) {
  x.set_requires_grad(true);
  x.zero_grad();
  Tensor loss = fn(x);
  if (!std::isfinite(loss.item()))
    throw Error("finite_diff_check: non-finite loss at base point");
  loss.backward();
  const Vals analytic = x.grad();

  double max_err = 0.0;
  auto& vals = x.mutable_values();
  for (int i = 0; i < x.size(); ++i) {
    const double orig = vals[i];
    vals[i] = orig + step;
    const double fp = fn(x).item();
    vals[i] = orig - step;
    const double fm = fn(x).item();
    vals[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw Error("finite_diff_check: non-finite value at coordinate " +
                  std::to_string(i));
    const double fd = (fp - fm) / (2.0 * step);
    const double err = std::abs(analytic[i] - fd) / (std::abs(fd) + 1e-8);
    max_err = std::max(max_err, err);
  }
  return max_err;
}

// -- optimizer ---------------------------------------------------------------

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state) {
  check(params.size() == grads.size(), "adam_step: shape mismatch");
  if (state.m.empty()) state.m.assign(params.size(), 0.0);
  if (state.v.empty()) state.v.assign(params.size(), 0.0);
  check(state.m.size() == params.size() && state.v.size() == params.size(),
        "adam_step: moment shape mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw Error("adam_step: non-finite gradient");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.t);
  const double bc2 = 1.0 - std::pow(state.beta2, state.t);
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] =
        state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace gp3
