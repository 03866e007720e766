#pragma once

// Plain-loop re-implementation of the two towers, written against the
// parameter tensors only. Tests compare the autodiff forward passes with it.

#include <cmath>
#include <vector>

#include "bicameral/doppelganger.hpp"
#include "bicameral/language_model.hpp"

namespace reference {

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const bicameral::Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

inline std::vector<double> to_vec(const bicameral::Tensor& t) {
  return {t.data().begin(), t.data().end()};
}

inline Mat affine(const Mat& x, const bicameral::Tensor& w, const bicameral::Tensor* b) {
  const auto W = to_mat(w);
  const std::size_t out = W.front().size();
  Mat y(x.size(), std::vector<double>(out, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < out; ++j) {
      double s = b ? b->data()[j] : 0.0;
      for (std::size_t k = 0; k < W.size(); ++k) s += x[i][k] * W[k][j];
      y[i][j] = s;
    }
  return y;
}

inline Mat norm(const Mat& x, const bicameral::Tensor& gain, const bicameral::Tensor& bias) {
  Mat y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i].size());
    double mean = 0.0;
    for (double v : x[i]) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : x[i]) var += (v - mean) * (v - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (std::size_t j = 0; j < x[i].size(); ++j)
      y[i][j] = (x[i][j] - mean) * inv * gain.data()[j] + bias.data()[j];
  }
  return y;
}

inline Mat block(const bicameral::AttentionModuleParams& p, const Mat& x) {
  const std::size_t T = x.size(), d = x.front().size();
  const Mat a = norm(x, p.ln1_gain, p.ln1_bias);
  Mat attn(T, std::vector<double>(d, 0.0));
  for (std::size_t h = 0; h < p.heads(); ++h) {
    const Mat q = affine(a, p.wq[h], nullptr);
    const Mat k = affine(a, p.wk[h], nullptr);
    const Mat v = affine(a, p.wv[h], nullptr);
    const std::size_t dh = q.front().size();
    Mat ctx(T, std::vector<double>(dh, 0.0));
    for (std::size_t i = 0; i < T; ++i) {
      std::vector<double> w(i + 1);
      double mx = -INFINITY;
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q[i][c] * k[j][c];
        w[j] = s / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, w[j]);
      }
      double z = 0.0;
      for (double& e : w) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j <= i; ++j)
        for (std::size_t c = 0; c < dh; ++c) ctx[i][c] += w[j] / z * v[j][c];
    }
    const Mat o = affine(ctx, p.wo[h], nullptr);
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t c = 0; c < d; ++c) attn[i][c] += o[i][c];
  }
  Mat h = x;
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t c = 0; c < d; ++c) h[i][c] += attn[i][c] + p.bo.data()[c];

  Mat f = affine(norm(h, p.ln2_gain, p.ln2_bias), p.ff_w1, &p.ff_b1);
  for (auto& row : f)
    for (double& v : row) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
  f = affine(f, p.ff_w2, &p.ff_b2);
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t c = 0; c < d; ++c) h[i][c] += f[i][c];
  return h;
}

struct LanguageResult {
  std::vector<Mat> taps;
  Mat logits;
};

inline LanguageResult language(bicameral::LanguageModel& lm, const bicameral::TokenIds& ids) {
  const std::size_t d = lm.config().d_model;
  const auto emb = to_mat(lm.token_embedding());
  Mat x(ids.size(), std::vector<double>(d));
  for (std::size_t t = 0; t < ids.size(); ++t)
    for (std::size_t j = 0; j < d; ++j) {
      const double i2 = static_cast<double>(2 * (j / 2));
      const double angle = static_cast<double>(t) / std::pow(10000.0, i2 / static_cast<double>(d));
      x[t][j] = emb[ids[t]][j] + (j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  LanguageResult r;
  r.taps.push_back(x);
  for (const auto& layer : lm.layers()) {
    x = block(layer, x);
    r.taps.push_back(x);
  }
  r.logits = affine(norm(x, lm.final_norm_gain(), lm.final_norm_bias()), lm.head_weight(),
                    &lm.head_bias());
  return r;
}

inline Mat doppel(bicameral::Doppelganger& dm, const std::vector<Mat>& taps) {
  Mat shadow = affine(taps[0], dm.input_proj_weight(), &dm.input_proj_bias());
  for (std::size_t k = 1; k <= dm.layers().size(); ++k) {
    Mat cat = taps[k - 1];
    for (std::size_t t = 0; t < cat.size(); ++t)
      cat[t].insert(cat[t].end(), shadow[t].begin(), shadow[t].end());
    const auto& fuse = dm.fusion()[k - 1];
    shadow = block(dm.layers()[k - 1], affine(cat, fuse.weight, &fuse.bias));
  }
  Mat s = affine(norm(shadow, dm.final_norm_gain(), dm.final_norm_bias()), dm.head_weight(),
                 &dm.head_bias());
  for (auto& row : s)
    for (double& v : row) v = 1.0 / (1.0 + std::exp(-v));
  return s;
}

}  // namespace reference
