#include "bicameral/attention.hpp"

#include <cmath>
#include <limits>

namespace bicameral {

Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

AttentionModuleParams AttentionModuleParams::init(std::size_t d, std::size_t n_heads,
                                                  std::size_t d_ff, std::mt19937_64& rng) {
  if (n_heads == 0 || d % n_heads != 0) {
    throw std::invalid_argument("attention width " + std::to_string(d) +
                                " not divisible by head count " + std::to_string(n_heads));
  }
  const std::size_t dh = d / n_heads;
  AttentionModuleParams p;
  for (std::size_t h = 0; h < n_heads; ++h) {
    p.wq.push_back(normal_tensor({d, dh}, kInitStddev, rng));
    p.wk.push_back(normal_tensor({d, dh}, kInitStddev, rng));
    p.wv.push_back(normal_tensor({d, dh}, kInitStddev, rng));
    p.wo.push_back(normal_tensor({dh, d}, kInitStddev, rng));
  }
  p.bo = Tensor::zeros({d}, true);
  p.ff_w1 = normal_tensor({d, d_ff}, kInitStddev, rng);
  p.ff_b1 = Tensor::zeros({d_ff}, true);
  p.ff_w2 = normal_tensor({d_ff, d}, kInitStddev, rng);
  p.ff_b2 = Tensor::zeros({d}, true);
  p.ln1_gain = Tensor::full({d}, 1.0, true);
  p.ln1_bias = Tensor::zeros({d}, true);
  p.ln2_gain = Tensor::full({d}, 1.0, true);
  p.ln2_bias = Tensor::zeros({d}, true);
  return p;
}

void AttentionModuleParams::collect(const std::string& prefix, NamedTensors& out) const {
  for (std::size_t h = 0; h < wq.size(); ++h) {
    const std::string hs = std::to_string(h);
    out.emplace_back(prefix + ".attn.wq." + hs, wq[h]);
    out.emplace_back(prefix + ".attn.wk." + hs, wk[h]);
    out.emplace_back(prefix + ".attn.wv." + hs, wv[h]);
    out.emplace_back(prefix + ".attn.wo." + hs, wo[h]);
  }
  out.emplace_back(prefix + ".attn.bo", bo);
  out.emplace_back(prefix + ".ffn.w1", ff_w1);
  out.emplace_back(prefix + ".ffn.b1", ff_b1);
  out.emplace_back(prefix + ".ffn.w2", ff_w2);
  out.emplace_back(prefix + ".ffn.b2", ff_b2);
  out.emplace_back(prefix + ".ln1.gain", ln1_gain);
  out.emplace_back(prefix + ".ln1.bias", ln1_bias);
  out.emplace_back(prefix + ".ln2.gain", ln2_gain);
  out.emplace_back(prefix + ".ln2.bias", ln2_bias);
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_bias(matmul(x, weight), bias);
}

Tensor causal_self_attention(const AttentionModuleParams& p, const Tensor& x) {
  const std::size_t t = x.rows();
  const std::size_t dh = p.wq.front().cols();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto mask = causal_mask(t);
  Tensor out;
  for (std::size_t h = 0; h < p.heads(); ++h) {
    Tensor q = matmul(x, p.wq[h]);
    Tensor k = matmul(x, p.wk[h]);
    Tensor v = matmul(x, p.wv[h]);
    Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt);
    scores = masked_fill(scores, mask, -std::numeric_limits<double>::infinity());
    Tensor head = matmul(matmul(softmax(scores, 1), v), p.wo[h]);
    out = out.defined() ? add(out, head) : head;
  }
  return add_bias(out, p.bo);
}

Tensor attention_module_forward(const AttentionModuleParams& p, const Tensor& x) {
  Tensor h = add(x, causal_self_attention(p, layer_norm(x, p.ln1_gain, p.ln1_bias, kLayerNormEps)));
  Tensor f = layer_norm(h, p.ln2_gain, p.ln2_bias, kLayerNormEps);
  f = linear(gelu(linear(f, p.ff_w1, p.ff_b1)), p.ff_w2, p.ff_b2);
  return add(h, f);
}

}  // namespace bicameral
