#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "bicameral/attention.hpp"
#include "bicameral/optim.hpp"
#include "bicameral/tokenizer.hpp"

namespace bicameral {

struct LMConfig {
  std::size_t vocab_size = 32;
  std::size_t d_model = 64;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_seq_len = 256;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const LMConfig&) const = default;
};

/// Probe values exposed to the Doppelgänger: index 0 is the positionally
/// encoded embedding, index k (1..N) the output of attention module k.
struct LayerTaps {
  std::vector<Tensor> outputs;

  std::size_t size() const { return outputs.size(); }
  const Tensor& operator[](std::size_t k) const { return outputs[k]; }
  std::size_t seq_len() const { return outputs.front().rows(); }
};

struct LMOutput {
  Tensor logits;  // T x V
  LayerTaps taps;
};

// Sinusoidal table PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(...).
Tensor positional_encoding(std::size_t seq_len, std::size_t d_model);
Tensor positional_encode(const Tensor& embeddings, std::size_t max_seq_len);

/// The language component: a decoder-only transformer whose per-module
/// outputs double as taps for the shadow stack.
///
/// Parameters are shared handles, so the class is move-only; use clone()
/// for an independent copy.
class LanguageModel {
 public:
  LanguageModel(const LMConfig& cfg, std::uint64_t seed);

  LanguageModel(LanguageModel&& other) noexcept;
  LanguageModel& operator=(LanguageModel&& other) noexcept;
  LanguageModel(const LanguageModel&) = delete;
  LanguageModel& operator=(const LanguageModel&) = delete;

  LanguageModel clone() const;

  const LMConfig& config() const { return cfg_; }

  // Pure in (parameters, tokens); safe to call concurrently on a frozen model.
  LMOutput forward(const TokenIds& tokens) const;

  // Canonical parameter order, names prefixed `lm.`.
  NamedTensors parameters() const;
  std::vector<Tensor> parameter_tensors() const;
  std::size_t parameter_count() const;
  std::uint64_t checksum() const;

  /// Marks the model frozen: parameters stop tracking gradients and the
  /// current checksum is recorded.
  void freeze();
  bool frozen() const { return frozen_; }
  std::uint64_t frozen_checksum() const { return frozen_checksum_; }
  // Used when restoring a checkpoint that was saved frozen.
  void restore_frozen(std::uint64_t recorded_checksum);

  std::uint64_t forward_passes() const { return forward_passes_->load(); }
  void reset_forward_passes() { forward_passes_->store(0); }

  // Direct parameter access for tests and checkpoint loading.
  Tensor& token_embedding() { return tok_emb_; }
  std::vector<AttentionModuleParams>& layers() { return layers_; }
  Tensor& final_norm_gain() { return lnf_gain_; }
  Tensor& final_norm_bias() { return lnf_bias_; }
  Tensor& head_weight() { return head_w_; }
  Tensor& head_bias() { return head_b_; }

 private:
  LMConfig cfg_;
  Tensor tok_emb_;
  std::vector<AttentionModuleParams> layers_;
  Tensor lnf_gain_, lnf_bias_;
  Tensor head_w_, head_b_;
  bool frozen_ = false;
  std::uint64_t frozen_checksum_ = 0;
  std::unique_ptr<std::atomic<std::uint64_t>> forward_passes_;
};

struct PretrainConfig {
  AdamConfig adam{};
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  // Training windows hold window + 1 tokens (inputs plus shifted targets).
  std::size_t window = 64;
  std::uint64_t seed = 0;
};

struct PretrainLog {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // token-weighted mean over each epoch's batches
};

// Non-overlapping windows of window + 1 tokens; a shorter tail is kept if it
// holds at least two tokens.
std::vector<TokenIds> chunk_corpus(const TokenIds& corpus, std::size_t window);

// Mean next-token cross entropy over all sequences, without mutation.
double next_token_loss(const LanguageModel& model, const std::vector<TokenIds>& sequences);

/// Next-token training of an unfrozen model. Throws ContractError if frozen.
PretrainLog pretrain(LanguageModel& model, const std::vector<TokenIds>& sequences,
                     const PretrainConfig& cfg);

}  // namespace bicameral
