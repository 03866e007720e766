#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bicameral {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool graph_released = false;

  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& grad_buffer();
};

}  // namespace detail

/// Dense row-major float64 tensor with optional reverse-mode gradient tracking.
///
/// A Tensor is a shared handle: copies alias the same storage. Operations on
/// tensors that require gradients record parent links, building a dynamic
/// graph that `backward()` walks once and then releases.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t dim(std::size_t axis) const;
  // Rows/cols of a rank-2 tensor.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  double at(std::size_t i) const { return node_->data.at(i); }
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zeros when no gradient has been accumulated yet.
  std::vector<double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  /// Reverse-mode pass from a scalar. Populates grad on every requires_grad
  /// ancestor, then releases the graph; calling it twice on the same loss
  /// throws std::logic_error.
  void backward();

  /// New leaf sharing no graph history; data is copied.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  // Graph plumbing for op implementations.
  static Tensor make_result(Shape shape, std::vector<double> data,
                            std::vector<Tensor> inputs,
                            std::function<void(detail::Node&)> backward_fn);
  detail::Node& node() const { return *node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

/// Number of graph nodes visited by the most recent backward() on this thread.
std::size_t last_backward_visit_count();

// ---------------------------------------------------------------------------
// Differentiable operations. Rank-2 unless stated otherwise.
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// x[r, :] + bias for every row r; bias has shape {cols}.
Tensor add_bias(const Tensor& x, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor softmax(const Tensor& x, std::size_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// Concatenation along the last axis; leading axes must agree.
Tensor concat_last(const Tensor& a, const Tensor& b);

// Rows of `table` (V x d) selected by ids.
Tensor embedding_lookup(const Tensor& table, std::span<const std::int64_t> ids);

// Positions where mask != 0 are replaced by value; no gradient flows there.
Tensor masked_fill(const Tensor& x, std::span<const std::uint8_t> mask, double value);
// mask[i][j] = 1 where j > i.
std::vector<std::uint8_t> causal_mask(std::size_t t);

Tensor mean(const Tensor& x);
Tensor sum(const Tensor& x);

// Mean over rows of -log softmax(logits[r])[targets[r]].
Tensor cross_entropy(const Tensor& logits, std::span<const std::int64_t> targets);

inline constexpr double kBceClamp = 1e-7;
// Mean of -[y log p + (1 - y) log(1 - p)] with p clamped to [eps, 1 - eps].
Tensor binary_cross_entropy(const Tensor& p, const Tensor& y, double eps = kBceClamp);

}  // namespace bicameral
