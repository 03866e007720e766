#include "bicameral/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bicameral {

GradcheckResult gradcheck(const std::string& name, const std::function<Tensor()>& loss_fn,
                          std::vector<Tensor> inputs, const GradcheckOptions& opts) {
  GradcheckResult result;
  result.name = name;

  for (auto& t : inputs) t.zero_grad();
  Tensor loss = loss_fn();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& t : inputs) analytic.push_back(t.grad());

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + opts.step;
      const double up = loss_fn().item();
      values[i] = saved - opts.step;
      const double down = loss_fn().item();
      values[i] = saved;

      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = analytic[k][i];
      const double abs_err = std::abs(a - numeric);
      const double rel_err =
          abs_err / std::max({std::abs(a), std::abs(numeric), opts.scale_floor});
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      result.max_rel_error = std::max(result.max_rel_error, rel_err);
      ++result.checked;
    }
  }
  for (auto& t : inputs) t.zero_grad();
  result.passed = result.max_rel_error < opts.rel_tol;
  return result;
}

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Keeps entries away from the kink of relu.
Tensor random_off_zero(Shape shape, std::mt19937_64& rng) {
  auto t = random_tensor(std::move(shape), rng);
  for (double& x : t.mutable_data())
    if (std::abs(x) < 0.05) x = x < 0 ? -0.05 : 0.05;
  return t;
}

// Contracts an arbitrary-shape output with fixed random weights so every
// output element reaches the scalar loss with a distinct coefficient.
Tensor project(const Tensor& out, const Tensor& weights) {
  return sum(mul(reshape(out, weights.shape()), weights));
}

Tensor fixed_weights(std::size_t n, std::mt19937_64& rng) {
  auto t = random_tensor({n}, rng);
  t.set_requires_grad(false);
  return t;
}

}  // namespace

std::vector<GradcheckResult> gradcheck_all_ops(std::uint64_t seed, const GradcheckOptions& opts) {
  std::mt19937_64 rng(seed);
  std::vector<GradcheckResult> results;

  {
    auto a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
    auto w = fixed_weights(6, rng);
    results.push_back(gradcheck("matmul", [&] { return project(matmul(a, b), w); }, {a, b}, opts));
  }
  {
    auto a = random_tensor({3, 5}, rng);
    auto w = fixed_weights(15, rng);
    results.push_back(gradcheck("transpose", [&] { return project(transpose(a), w); }, {a}, opts));
  }
  {
    auto a = random_tensor({2, 6}, rng);
    auto w = fixed_weights(12, rng);
    results.push_back(
        gradcheck("reshape", [&] { return project(reshape(a, {3, 4}), w); }, {a}, opts));
  }
  {
    auto a = random_tensor({3, 3}, rng), b = random_tensor({3, 3}, rng);
    auto w = fixed_weights(9, rng);
    results.push_back(gradcheck("add", [&] { return project(add(a, b), w); }, {a, b}, opts));
    results.push_back(gradcheck("mul", [&] { return project(mul(a, b), w); }, {a, b}, opts));
    results.push_back(gradcheck("scale", [&] { return project(scale(a, -1.7), w); }, {a}, opts));
  }
  {
    auto x = random_tensor({4, 3}, rng), bias = random_tensor({3}, rng);
    auto w = fixed_weights(12, rng);
    results.push_back(
        gradcheck("add_bias", [&] { return project(add_bias(x, bias), w); }, {x, bias}, opts));
  }
  {
    auto x = random_off_zero({4, 5}, rng);
    auto w = fixed_weights(20, rng);
    results.push_back(gradcheck("relu", [&] { return project(relu(x), w); }, {x}, opts));
    results.push_back(gradcheck("gelu", [&] { return project(gelu(x), w); }, {x}, opts));
    results.push_back(gradcheck("sigmoid", [&] { return project(sigmoid(x), w); }, {x}, opts));
  }
  {
    auto x = random_tensor({2, 3, 4}, rng);
    auto w = fixed_weights(24, rng);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      results.push_back(gradcheck("softmax(axis=" + std::to_string(axis) + ")",
                                  [&] { return project(softmax(x, axis), w); }, {x}, opts));
    }
  }
  {
    auto x = random_tensor({3, 6}, rng), g = random_tensor({6}, rng), b = random_tensor({6}, rng);
    auto w = fixed_weights(18, rng);
    results.push_back(gradcheck("layer_norm", [&] { return project(layer_norm(x, g, b), w); },
                                {x, g, b}, opts));
  }
  {
    auto a = random_tensor({2, 2, 3}, rng), b = random_tensor({2, 2, 2}, rng);
    auto w = fixed_weights(20, rng);
    results.push_back(
        gradcheck("concat_last", [&] { return project(concat_last(a, b), w); }, {a, b}, opts));
  }
  {
    auto table = random_tensor({5, 3}, rng);
    const std::vector<std::int64_t> ids{4, 0, 4, 2};
    auto w = fixed_weights(12, rng);
    results.push_back(gradcheck(
        "embedding_lookup", [&] { return project(embedding_lookup(table, ids), w); }, {table},
        opts));
  }
  {
    auto x = random_tensor({4, 4}, rng);
    const auto mask = causal_mask(4);
    auto w = fixed_weights(16, rng);
    results.push_back(gradcheck(
        "masked_fill", [&] { return project(masked_fill(x, mask, -3.0), w); }, {x}, opts));
  }
  {
    auto x = random_tensor({3, 4}, rng);
    results.push_back(gradcheck("mean", [&] { return mean(mul(x, x)); }, {x}, opts));
    results.push_back(gradcheck("sum", [&] { return sum(mul(x, x)); }, {x}, opts));
  }
  {
    auto logits = random_tensor({4, 6}, rng);
    const std::vector<std::int64_t> targets{0, 5, 2, 2};
    results.push_back(gradcheck("cross_entropy", [&] { return cross_entropy(logits, targets); },
                                {logits}, opts));
  }
  {
    auto p = random_tensor({3, 2}, rng, 0.05, 0.95);
    auto y = random_tensor({3, 2}, rng, 0.0, 1.0);
    results.push_back(gradcheck("binary_cross_entropy",
                                [&] { return binary_cross_entropy(p, y); }, {p, y}, opts));
  }
  return results;
}

}  // namespace bicameral
