#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bicameral/tensor.hpp"

namespace bicameral {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kInitStddev = 0.02;
inline constexpr double kEmbeddingInitStddev = 1.0;

/// Parameters of one pre-norm decoder block:
///   h = x + Attn(LN1(x)),  y = h + FFN(LN2(h)).
/// Attention keeps a separate projection matrix per head; head outputs are
/// projected back to the model width and summed.
struct AttentionModuleParams {
  std::vector<Tensor> wq;  // n_heads x [d x d_head]
  std::vector<Tensor> wk;
  std::vector<Tensor> wv;
  std::vector<Tensor> wo;  // n_heads x [d_head x d]
  Tensor bo;               // [d]
  Tensor ff_w1, ff_b1;     // [d x d_ff], [d_ff]
  Tensor ff_w2, ff_b2;     // [d_ff x d], [d]
  Tensor ln1_gain, ln1_bias;
  Tensor ln2_gain, ln2_bias;

  std::size_t width() const { return bo.size(); }
  std::size_t heads() const { return wq.size(); }

  static AttentionModuleParams init(std::size_t d, std::size_t n_heads, std::size_t d_ff,
                                    std::mt19937_64& rng);

  // Appends (prefix + "." + field, tensor) in a fixed canonical order.
  void collect(const std::string& prefix, NamedTensors& out) const;
};

Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng);

// Causal multi-head self-attention over the rows of x (T x d).
Tensor causal_self_attention(const AttentionModuleParams& p, const Tensor& x);

// Full pre-norm block including both residual paths.
Tensor attention_module_forward(const AttentionModuleParams& p, const Tensor& x);

// x W + b for a [d_in x d_out] weight.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

}  // namespace bicameral
