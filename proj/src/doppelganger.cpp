#include "bicameral/doppelganger.hpp"

#include <random>

#include "bicameral/checksum.hpp"
#include "bicameral/errors.hpp"

namespace bicameral {

void DoppelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("DoppelConfig: ") + what);
  };
  require(d_shadow >= 1, "d_shadow must be >= 1");
  require(n_objectives >= 1, "n_objectives must be >= 1");
  require(n_heads >= 1, "n_heads must be >= 1");
  require(d_ff >= 1, "d_ff must be >= 1");
  require(d_shadow % n_heads == 0, "d_shadow must be divisible by n_heads");
}

Doppelganger::Doppelganger(const DoppelConfig& cfg, const LMConfig& lm, std::uint64_t seed)
    : cfg_(cfg), d_model_(lm.d_model) {
  cfg_.validate();
  lm.validate();
  const std::size_t ds = cfg_.d_shadow;
  std::mt19937_64 rng(seed);
  in_w_ = normal_tensor({d_model_, ds}, kInitStddev, rng);
  in_b_ = Tensor::zeros({ds}, true);
  for (std::size_t k = 0; k < lm.n_layers; ++k) {
    // Language-tap rows small-random, shadow-path rows near identity.
    Tensor w = normal_tensor({d_model_ + ds, ds}, kInitStddev, rng);
    auto wd = w.mutable_data();
    for (std::size_t i = 0; i < ds; ++i) wd[(d_model_ + i) * ds + i] += 1.0;
    fusion_.push_back({w, Tensor::zeros({ds}, true)});
    layers_.push_back(AttentionModuleParams::init(ds, cfg_.n_heads, cfg_.d_ff, rng));
  }
  lnf_gain_ = Tensor::full({ds}, 1.0, true);
  lnf_bias_ = Tensor::zeros({ds}, true);
  head_w_ = normal_tensor({ds, cfg_.n_objectives}, kInitStddev, rng);
  head_b_ = Tensor::zeros({cfg_.n_objectives}, true);
}

Doppelganger Doppelganger::clone() const {
  LMConfig lm;
  lm.d_model = d_model_;
  lm.n_layers = layers_.size();
  lm.n_heads = 1;
  Doppelganger copy(cfg_, lm, 0);
  auto src = parameters();
  auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto out = dst[i].second.mutable_data();
    std::copy(src[i].second.data().begin(), src[i].second.data().end(), out.begin());
  }
  return copy;
}

Tensor Doppelganger::forward(const LayerTaps& taps) const {
  if (taps.size() != layers_.size() + 1) {
    throw ShapeError("doppel_forward: expected " + std::to_string(layers_.size() + 1) +
                     " taps, got " + std::to_string(taps.size()));
  }
  for (const auto& t : taps.outputs) {
    if (t.rank() != 2 || t.cols() != d_model_ || t.rows() != taps.seq_len()) {
      throw ShapeError("doppel_forward: tap of shape " + shape_str(t.shape()) +
                       " does not match d_model " + std::to_string(d_model_));
    }
  }
  Tensor shadow = linear(taps[0], in_w_, in_b_);
  for (std::size_t k = 1; k <= layers_.size(); ++k) {
    const auto& fuse = fusion_[k - 1];
    Tensor fused = linear(concat_last(taps[k - 1], shadow), fuse.weight, fuse.bias);
    shadow = attention_module_forward(layers_[k - 1], fused);
  }
  Tensor normed = layer_norm(shadow, lnf_gain_, lnf_bias_, kLayerNormEps);
  return sigmoid(linear(normed, head_w_, head_b_));
}

NamedTensors Doppelganger::parameters() const {
  NamedTensors out;
  out.emplace_back("doppel.in_proj.weight", in_w_);
  out.emplace_back("doppel.in_proj.bias", in_b_);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const std::string ks = std::to_string(k);
    out.emplace_back("doppel.fuse." + ks + ".weight", fusion_[k].weight);
    out.emplace_back("doppel.fuse." + ks + ".bias", fusion_[k].bias);
    layers_[k].collect("doppel.layers." + ks, out);
  }
  out.emplace_back("doppel.ln_f.gain", lnf_gain_);
  out.emplace_back("doppel.ln_f.bias", lnf_bias_);
  out.emplace_back("doppel.head.weight", head_w_);
  out.emplace_back("doppel.head.bias", head_b_);
  return out;
}

std::vector<Tensor> Doppelganger::parameter_tensors() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : parameters()) out.push_back(t);
  return out;
}

std::size_t Doppelganger::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : parameters()) n += t.size();
  return n;
}

std::uint64_t Doppelganger::checksum() const { return parameter_checksum(parameters()); }

// ---------------------------------------------------------------------------

BicameralModel::BicameralModel(LanguageModel lm, Doppelganger dm)
    : language(std::move(lm)), doppel(std::move(dm)) {
  const auto& c = language.config();
  if (doppel.n_layers() != c.n_layers || doppel.lm_width() != c.d_model) {
    throw ShapeError("Doppelgänger built for N=" + std::to_string(doppel.n_layers()) +
                     ", d_model=" + std::to_string(doppel.lm_width()) +
                     " cannot pair with language N=" + std::to_string(c.n_layers) +
                     ", d_model=" + std::to_string(c.d_model));
  }
}

BicameralModel::Output BicameralModel::forward(const TokenIds& tokens) const {
  auto lm = language.forward(tokens);
  Output out{lm.logits, std::move(lm.taps), Tensor{}};
  out.scores = doppel.forward(out.taps);
  return out;
}

Tensor BicameralModel::score_prefixes(const TokenIds& tokens) const {
  return forward(tokens).scores;
}

// ---------------------------------------------------------------------------

std::vector<GradcheckResult> gradcheck_bicameral(std::uint64_t seed,
                                                 const GradcheckOptions& opts) {
  LMConfig lc;
  lc.vocab_size = 7;
  lc.d_model = 16;
  lc.n_layers = 2;
  lc.n_heads = 2;
  lc.d_ff = 32;
  lc.max_seq_len = 16;
  DoppelConfig dc;
  dc.d_shadow = 8;
  dc.n_objectives = 2;
  dc.n_heads = 2;
  dc.d_ff = 16;

  BicameralModel bm(LanguageModel(lc, seed), Doppelganger(dc, lc, seed + 1));

  // Larger-than-init weights so every path carries an O(1) gradient.
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> jitter(-0.4, 0.4);
  for (auto& [name, t] : bm.language.parameters())
    for (double& v : t.mutable_data()) v += jitter(rng);
  for (auto& [name, t] : bm.doppel.parameters())
    for (double& v : t.mutable_data()) v += jitter(rng);

  const TokenIds tokens{3, 0, 6, 2, 5};
  const TokenIds targets{0, 6, 2, 5, 1};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> label_values(tokens.size() * dc.n_objectives);
  for (double& v : label_values) v = unit(rng);
  const Tensor labels = Tensor::from({tokens.size(), dc.n_objectives}, label_values);

  std::vector<GradcheckResult> results;

  auto all = bm.language.parameter_tensors();
  for (auto& t : bm.doppel.parameter_tensors()) all.push_back(t);
  results.push_back(gradcheck(
      "bicameral_loss(all parameters)",
      [&] {
        auto out = bm.forward(tokens);
        return add(cross_entropy(out.logits, targets), binary_cross_entropy(out.scores, labels));
      },
      all, opts));

  bm.language.freeze();
  results.push_back(gradcheck(
      "doppel_bce(frozen language)",
      [&] { return binary_cross_entropy(bm.score_prefixes(tokens), labels); },
      bm.doppel.parameter_tensors(), opts));
  return results;
}

}  // namespace bicameral
