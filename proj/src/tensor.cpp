#include "bicameral/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "bicameral/kernels.hpp"

namespace bicameral {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace detail {

std::vector<double>& Node::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

}  // namespace detail

namespace {

thread_local std::size_t g_last_visit_count = 0;

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

// Adds `values` into the parent's gradient when that parent tracks one.
void accumulate(detail::Node& parent, std::span<const double> values) {
  if (!parent.requires_grad) return;
  auto& g = parent.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += values[i];
}

template <typename F>
Tensor unary_elementwise(const Tensor& x, F&& fwd, std::function<void(detail::Node&)> bwd) {
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return Tensor::make_result(x.shape(), std::move(out), {x}, std::move(bwd));
}

}  // namespace

std::size_t last_backward_visit_count() { return g_last_visit_count; }

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  node->data.assign(numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("Tensor::from: shape " + shape_str(shape) + " holds " +
                     std::to_string(numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) throw ShapeError("axis " + std::to_string(axis) + " out of range");
  return node_->shape[axis];
}

std::size_t Tensor::rows() const {
  require_rank2(*this, "rows");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require_rank2(*this, "cols");
  return node_->shape[1];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  require_rank2(*this, "at");
  return node_->data.at(r * node_->shape[1] + c);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(size(), 0.0);
  return node_->grad;
}

Tensor Tensor::detach() const {
  return from(shape(), node_->data, false);
}

Tensor Tensor::make_result(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  const bool tracked = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
  if (tracked) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (auto& in : inputs) node->parents.push_back(in.node_);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

void Tensor::backward() {
  if (size() != 1) throw ShapeError("backward() requires a scalar, got " + shape_str(shape()));
  if (node_->graph_released) {
    throw std::logic_error("backward() called twice on the same graph");
  }
  if (!node_->requires_grad) throw std::logic_error("backward() on a tensor without grad");

  // Iterative post-order DFS; each node enters `order` exactly once.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  g_last_visit_count = order.size();

  for (detail::Node* n : order) {
    if (n->backward_fn) {
      n->backward_fn = nullptr;
      n->parents.clear();
    }
  }
  node_->graph_released = true;
}

// ---------------------------------------------------------------------------
// Linear algebra and shape ops
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  std::vector<double> out(m * p);
  kernels::gemm_nn(a.data(), b.data(), out, m, k, p);
  return Tensor::make_result({m, p}, std::move(out), {a, b}, [m, k, p](detail::Node& self) {
    auto& na = *self.parents[0];
    auto& nb = *self.parents[1];
    if (na.requires_grad) {
      std::vector<double> ga(m * k);
      kernels::gemm_nt(self.grad, nb.data, ga, m, p, k);
      accumulate(na, ga);
    }
    if (nb.requires_grad) {
      std::vector<double> gb(k * p);
      kernels::gemm_tn(na.data, self.grad, gb, k, m, p);
      accumulate(nb, gb);
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  const auto in = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  return Tensor::make_result({c, r}, std::move(out), {a}, [r, c](detail::Node& self) {
    auto& na = *self.parents[0];
    std::vector<double> g(r * c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] = self.grad[j * r + i];
    accumulate(na, g);
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {a},
                             [](detail::Node& self) { accumulate(*self.parents[0], self.grad); });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    accumulate(*self.parents[0], self.grad);
    accumulate(*self.parents[1], self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& na = *self.parents[0];
    auto& nb = *self.parents[1];
    const std::size_t n = self.grad.size();
    std::vector<double> g(n);
    if (na.requires_grad) {
      for (std::size_t i = 0; i < n; ++i) g[i] = self.grad[i] * nb.data[i];
      accumulate(na, g);
    }
    if (nb.requires_grad) {
      for (std::size_t i = 0; i < n; ++i) g[i] = self.grad[i] * na.data[i];
      accumulate(nb, g);
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary_elementwise(a, [factor](double v) { return v * factor; },
                           [factor](detail::Node& self) {
                             std::vector<double> g(self.grad);
                             for (double& v : g) v *= factor;
                             accumulate(*self.parents[0], g);
                           });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_rank2(x, "add_bias");
  const std::size_t r = x.rows(), c = x.cols();
  if (bias.size() != c) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match " +
                     shape_str(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += b[j];
  return Tensor::make_result(x.shape(), std::move(out), {x, bias}, [r, c](detail::Node& self) {
    accumulate(*self.parents[0], self.grad);
    auto& nb = *self.parents[1];
    if (nb.requires_grad) {
      std::vector<double> g(c, 0.0);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
      accumulate(nb, g);
    }
  });
}

Tensor relu(const Tensor& x) {
  return unary_elementwise(x, [](double v) { return v > 0.0 ? v : 0.0; },
                           [](detail::Node& self) {
                             auto& nx = *self.parents[0];
                             std::vector<double> g(self.grad.size());
                             for (std::size_t i = 0; i < g.size(); ++i)
                               g[i] = nx.data[i] > 0.0 ? self.grad[i] : 0.0;
                             accumulate(nx, g);
                           });
}

// Exact GELU: x * Phi(x).
Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary_elementwise(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](detail::Node& self) {
        auto& nx = *self.parents[0];
        std::vector<double> g(self.grad.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double v = nx.data[i];
          const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
          const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
          g[i] = self.grad[i] * (cdf + v * pdf);
        }
        accumulate(nx, g);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary_elementwise(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](detail::Node& self) {
        std::vector<double> g(self.grad.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = self.data[i];
          g[i] = self.grad[i] * s * (1.0 - s);
        }
        accumulate(*self.parents[0], g);
      });
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for " +
                     shape_str(x.shape()));
  }
  const auto& s = x.shape();
  const std::size_t len = s[axis];
  const std::size_t inner = numel(Shape(s.begin() + static_cast<std::ptrdiff_t>(axis) + 1, s.end()));
  const std::size_t outer = numel(Shape(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(axis)));
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t q = 0; q < inner; ++q) {
      const std::size_t base = o * len * inner + q;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < len; ++j) mx = std::max(mx, in[base + j * inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const double e = std::exp(in[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= total;
    }
  }
  return Tensor::make_result(s, std::move(out), {x}, [outer, inner, len](detail::Node& self) {
    std::vector<double> g(self.grad.size());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t q = 0; q < inner; ++q) {
        const std::size_t base = o * len * inner + q;
        double dot = 0.0;
        for (std::size_t j = 0; j < len; ++j)
          dot += self.data[base + j * inner] * self.grad[base + j * inner];
        for (std::size_t j = 0; j < len; ++j) {
          const std::size_t idx = base + j * inner;
          g[idx] = self.data[idx] * (self.grad[idx] - dot);
        }
      }
    }
    accumulate(*self.parents[0], g);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const std::size_t d = x.shape().back();
  if (gain.size() != d || bias.size() != d) {
    throw ShapeError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                     shape_str(bias.shape()) + " do not match last axis of " +
                     shape_str(x.shape()));
  }
  const std::size_t rows = d == 0 ? 0 : x.size() / d;
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> rstd(rows);
  const auto in = x.data();
  const auto gw = gain.data();
  const auto bw = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * rstd[r];
      xhat[r * d + j] = h;
      out[r * d + j] = gw[j] * h + bw[j];
    }
  }
  return Tensor::make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](detail::Node& self) {
        auto& nx = *self.parents[0];
        auto& ng = *self.parents[1];
        auto& nb = *self.parents[2];
        if (ng.requires_grad || nb.requires_grad) {
          std::vector<double> gg(d, 0.0), gb(d, 0.0);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) {
              gg[j] += self.grad[r * d + j] * xhat[r * d + j];
              gb[j] += self.grad[r * d + j];
            }
          accumulate(ng, gg);
          accumulate(nb, gb);
        }
        if (nx.requires_grad) {
          std::vector<double> gx(rows * d);
          std::vector<double> gh(d);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_gh = 0.0, mean_ghh = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              gh[j] = self.grad[r * d + j] * ng.data[j];
              mean_gh += gh[j];
              mean_ghh += gh[j] * xhat[r * d + j];
            }
            mean_gh /= static_cast<double>(d);
            mean_ghh /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j)
              gx[r * d + j] = rstd[r] * (gh[j] - mean_gh - xhat[r * d + j] * mean_ghh);
          }
          accumulate(nx, gx);
        }
      });
}

// ---------------------------------------------------------------------------
// Structural
// ---------------------------------------------------------------------------

Tensor concat_last(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    throw ShapeError("concat_last: leading axes disagree for " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  const std::size_t p = a.shape().back(), q = b.shape().back();
  const std::size_t rows = numel(Shape(a.shape().begin(), a.shape().end() - 1));
  Shape shape = a.shape();
  shape.back() = p + q;
  std::vector<double> out(rows * (p + q));
  const auto x = a.data(), y = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.data() + r * p, p, out.data() + r * (p + q));
    std::copy_n(y.data() + r * q, q, out.data() + r * (p + q) + p);
  }
  return Tensor::make_result(std::move(shape), std::move(out), {a, b},
                             [rows, p, q](detail::Node& self) {
                               std::vector<double> ga(rows * p), gb(rows * q);
                               for (std::size_t r = 0; r < rows; ++r) {
                                 const double* g = self.grad.data() + r * (p + q);
                                 std::copy_n(g, p, ga.data() + r * p);
                                 std::copy_n(g + p, q, gb.data() + r * q);
                               }
                               accumulate(*self.parents[0], ga);
                               accumulate(*self.parents[1], gb);
                             });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int64_t> ids) {
  require_rank2(table, "embedding_lookup");
  const std::size_t v = table.rows(), d = table.cols();
  std::vector<std::size_t> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      throw std::out_of_range("embedding_lookup: id " + std::to_string(ids[i]) +
                              " outside vocabulary of " + std::to_string(v));
    }
    rows[i] = static_cast<std::size_t>(ids[i]);
  }
  std::vector<double> out(ids.size() * d);
  const auto w = table.data();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(w.data() + rows[i] * d, d, out.data() + i * d);
  return Tensor::make_result({ids.size(), d}, std::move(out), {table},
                             [rows = std::move(rows), d](detail::Node& self) {
                               auto& nt = *self.parents[0];
                               if (!nt.requires_grad) return;
                               auto& g = nt.grad_buffer();
                               for (std::size_t i = 0; i < rows.size(); ++i)
                                 for (std::size_t j = 0; j < d; ++j)
                                   g[rows[i] * d + j] += self.grad[i * d + j];
                             });
}

Tensor masked_fill(const Tensor& x, std::span<const std::uint8_t> mask, double value) {
  if (mask.size() != x.size()) {
    throw ShapeError("masked_fill: mask of " + std::to_string(mask.size()) +
                     " entries for tensor " + shape_str(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (mask[i]) out[i] = value;
  std::vector<std::uint8_t> keep_mask(mask.begin(), mask.end());
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [m = std::move(keep_mask)](detail::Node& self) {
                               std::vector<double> g(self.grad);
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 if (m[i]) g[i] = 0.0;
                               accumulate(*self.parents[0], g);
                             });
}

std::vector<std::uint8_t> causal_mask(std::size_t t) {
  std::vector<std::uint8_t> m(t * t, 0);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = i + 1; j < t; ++j) m[i * t + j] = 1;
  return m;
}

// ---------------------------------------------------------------------------
// Reductions and losses
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return Tensor::make_result({}, {total}, {x}, [](detail::Node& self) {
    auto& nx = *self.parents[0];
    std::vector<double> g(nx.data.size(), self.grad[0]);
    accumulate(nx, g);
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::int64_t> targets) {
  require_rank2(logits, "cross_entropy");
  const std::size_t t = logits.rows(), v = logits.cols();
  if (targets.size() != t) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(t) + " rows");
  }
  if (t == 0) throw ShapeError("cross_entropy: no rows");
  for (auto id : targets) {
    if (id < 0 || static_cast<std::size_t>(id) >= v) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(v));
    }
  }
  const auto in = logits.data();
  std::vector<double> probs(t * v);
  double total = 0.0;
  for (std::size_t r = 0; r < t; ++r) {
    const double* row = in.data() + r * v;
    const double mx = *std::max_element(row, row + v);
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      probs[r * v + j] = std::exp(row[j] - mx);
      z += probs[r * v + j];
    }
    for (std::size_t j = 0; j < v; ++j) probs[r * v + j] /= z;
    total += (mx + std::log(z)) - row[targets[r]];
  }
  std::vector<std::int64_t> tgt(targets.begin(), targets.end());
  return Tensor::make_result(
      {}, {total / static_cast<double>(t)}, {logits},
      [t, v, probs = std::move(probs), tgt = std::move(tgt)](detail::Node& self) {
        const double s = self.grad[0] / static_cast<double>(t);
        std::vector<double> g(t * v);
        for (std::size_t r = 0; r < t; ++r) {
          for (std::size_t j = 0; j < v; ++j) g[r * v + j] = s * probs[r * v + j];
          g[r * v + static_cast<std::size_t>(tgt[r])] -= s;
        }
        accumulate(*self.parents[0], g);
      });
}

Tensor binary_cross_entropy(const Tensor& p, const Tensor& y, double eps) {
  require_same_shape(p, y, "binary_cross_entropy");
  const std::size_t n = p.size();
  if (n == 0) throw ShapeError("binary_cross_entropy: empty input");
  const auto pp = p.data(), yy = y.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = std::clamp(pp[i], eps, 1.0 - eps);
    total -= yy[i] * std::log(pc) + (1.0 - yy[i]) * std::log(1.0 - pc);
  }
  return Tensor::make_result({}, {total / static_cast<double>(n)}, {p, y},
                             [n, eps](detail::Node& self) {
                               auto& np = *self.parents[0];
                               auto& ny = *self.parents[1];
                               const double s = self.grad[0] / static_cast<double>(n);
                               std::vector<double> g(n);
                               if (np.requires_grad) {
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double pv = np.data[i];
                                   if (pv <= eps || pv >= 1.0 - eps) {
                                     g[i] = 0.0;
                                   } else {
                                     g[i] = s * (pv - ny.data[i]) / (pv * (1.0 - pv));
                                   }
                                 }
                                 accumulate(np, g);
                               }
                               if (ny.requires_grad) {
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double pc = std::clamp(np.data[i], eps, 1.0 - eps);
                                   g[i] = -s * (std::log(pc) - std::log(1.0 - pc));
                                 }
                                 accumulate(ny, g);
                               }
                             });
}

}  // namespace bicameral
