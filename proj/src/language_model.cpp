#include "bicameral/language_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bicameral/checksum.hpp"
#include "bicameral/errors.hpp"

namespace bicameral {

void LMConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("LMConfig: ") + what);
  };
  require(vocab_size >= 1, "vocab_size must be >= 1");
  require(d_model >= 1, "d_model must be >= 1");
  require(n_layers >= 1, "n_layers must be >= 1");
  require(n_heads >= 1, "n_heads must be >= 1");
  require(d_ff >= 1, "d_ff must be >= 1");
  require(max_seq_len >= 1, "max_seq_len must be >= 1");
  require(d_model % n_heads == 0, "d_model must be divisible by n_heads");
}

Tensor positional_encoding(std::size_t seq_len, std::size_t d_model) {
  std::vector<double> pe(seq_len * d_model);
  for (std::size_t pos = 0; pos < seq_len; ++pos) {
    for (std::size_t j = 0; j < d_model; ++j) {
      const double pair = static_cast<double>(j - j % 2);
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, pair / static_cast<double>(d_model));
      pe[pos * d_model + j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::from({seq_len, d_model}, std::move(pe));
}

Tensor positional_encode(const Tensor& embeddings, std::size_t max_seq_len) {
  const std::size_t t = embeddings.rows();
  if (t > max_seq_len) {
    throw std::length_error("sequence of length " + std::to_string(t) + " exceeds max_seq_len " +
                            std::to_string(max_seq_len));
  }
  return add(embeddings, positional_encoding(t, embeddings.cols()));
}

// ---------------------------------------------------------------------------

LanguageModel::LanguageModel(const LMConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), forward_passes_(std::make_unique<std::atomic<std::uint64_t>>(0)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  // Unit scale, so token identity is not drowned by the sinusoidal encoding.
  tok_emb_ = normal_tensor({cfg_.vocab_size, cfg_.d_model}, kEmbeddingInitStddev, rng);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    layers_.push_back(AttentionModuleParams::init(cfg_.d_model, cfg_.n_heads, cfg_.d_ff, rng));
  }
  lnf_gain_ = Tensor::full({cfg_.d_model}, 1.0, true);
  lnf_bias_ = Tensor::zeros({cfg_.d_model}, true);
  head_w_ = normal_tensor({cfg_.d_model, cfg_.vocab_size}, kInitStddev, rng);
  head_b_ = Tensor::zeros({cfg_.vocab_size}, true);
}

LanguageModel::LanguageModel(LanguageModel&& other) noexcept = default;
LanguageModel& LanguageModel::operator=(LanguageModel&& other) noexcept = default;

LanguageModel LanguageModel::clone() const {
  LanguageModel copy(cfg_, 0);
  auto src = parameters();
  auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto out = dst[i].second.mutable_data();
    std::copy(src[i].second.data().begin(), src[i].second.data().end(), out.begin());
  }
  if (frozen_) copy.freeze();
  return copy;
}

LMOutput LanguageModel::forward(const TokenIds& tokens) const {
  if (tokens.empty()) throw std::invalid_argument("forward: empty token sequence");
  forward_passes_->fetch_add(1);
  LMOutput out;
  Tensor x = positional_encode(embedding_lookup(tok_emb_, tokens), cfg_.max_seq_len);
  out.taps.outputs.reserve(cfg_.n_layers + 1);
  out.taps.outputs.push_back(x);
  for (const auto& layer : layers_) {
    x = attention_module_forward(layer, x);
    out.taps.outputs.push_back(x);
  }
  out.logits = linear(layer_norm(x, lnf_gain_, lnf_bias_, kLayerNormEps), head_w_, head_b_);
  return out;
}

NamedTensors LanguageModel::parameters() const {
  NamedTensors out;
  out.emplace_back("lm.tok_emb", tok_emb_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].collect("lm.layers." + std::to_string(l), out);
  }
  out.emplace_back("lm.ln_f.gain", lnf_gain_);
  out.emplace_back("lm.ln_f.bias", lnf_bias_);
  out.emplace_back("lm.head.weight", head_w_);
  out.emplace_back("lm.head.bias", head_b_);
  return out;
}

std::vector<Tensor> LanguageModel::parameter_tensors() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : parameters()) out.push_back(t);
  return out;
}

std::size_t LanguageModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : parameters()) n += t.size();
  return n;
}

std::uint64_t LanguageModel::checksum() const { return parameter_checksum(parameters()); }

void LanguageModel::freeze() {
  for (auto& [name, t] : parameters()) {
    t.set_requires_grad(false);
    t.zero_grad();
  }
  frozen_ = true;
  frozen_checksum_ = checksum();
}

void LanguageModel::restore_frozen(std::uint64_t recorded_checksum) {
  freeze();
  if (frozen_checksum_ != recorded_checksum) {
    throw ContractError("frozen language parameters do not match their recorded checksum");
  }
}

// ---------------------------------------------------------------------------

std::vector<TokenIds> chunk_corpus(const TokenIds& corpus, std::size_t window) {
  if (window == 0) throw std::invalid_argument("chunk_corpus: window must be >= 1");
  std::vector<TokenIds> out;
  for (std::size_t start = 0; start + 1 < corpus.size(); start += window) {
    const std::size_t end = std::min(corpus.size(), start + window + 1);
    out.emplace_back(corpus.begin() + static_cast<std::ptrdiff_t>(start),
                     corpus.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

namespace {

// Returns the cross entropy of predicting seq[1..] from seq[..L-1].
Tensor sequence_loss(const LanguageModel& model, const TokenIds& seq) {
  TokenIds inputs(seq.begin(), seq.end() - 1);
  TokenIds targets(seq.begin() + 1, seq.end());
  return cross_entropy(model.forward(inputs).logits, targets);
}

}  // namespace

double next_token_loss(const LanguageModel& model, const std::vector<TokenIds>& sequences) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    if (seq.size() < 2) continue;
    total += sequence_loss(model, seq).item() * static_cast<double>(seq.size() - 1);
    count += seq.size() - 1;
  }
  if (count == 0) throw std::invalid_argument("next_token_loss: no sequence has two tokens");
  return total / static_cast<double>(count);
}

PretrainLog pretrain(LanguageModel& model, const std::vector<TokenIds>& sequences,
                     const PretrainConfig& cfg) {
  if (model.frozen()) throw ContractError("pretrain: language component is frozen");
  std::vector<TokenIds> usable;
  for (const auto& s : sequences)
    if (s.size() >= 2) usable.push_back(s);
  if (usable.empty()) throw std::invalid_argument("pretrain: corpus has no trainable sequence");
  if (cfg.batch_size == 0) throw std::invalid_argument("pretrain: batch_size must be >= 1");

  PretrainLog log;
  log.initial_loss = next_token_loss(model, usable);

  Adam opt(model.parameter_tensors(), cfg.adam);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      std::size_t batch_tokens = 0;
      for (std::size_t i = b; i < e; ++i) batch_tokens += usable[order[i]].size() - 1;
      opt.zero_grad();
      for (std::size_t i = b; i < e; ++i) {
        const auto& seq = usable[order[i]];
        const double weight =
            static_cast<double>(seq.size() - 1) / static_cast<double>(batch_tokens);
        Tensor loss = sequence_loss(model, seq);
        epoch_total += loss.item() * static_cast<double>(seq.size() - 1);
        Tensor weighted = scale(loss, weight);
        if (weighted.requires_grad()) weighted.backward();
      }
      opt.step();
      epoch_tokens += batch_tokens;
    }
    log.epoch_loss.push_back(epoch_total / static_cast<double>(epoch_tokens));
    if (!std::isfinite(log.epoch_loss.back())) {
      throw NumericError("pretrain: non-finite loss in epoch " + std::to_string(epoch + 1));
    }
  }
  opt.zero_grad();
  return log;
}

}  // namespace bicameral
