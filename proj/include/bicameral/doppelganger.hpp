#pragma once

#include <cstdint>
#include <vector>

#include "bicameral/attention.hpp"
#include "bicameral/gradcheck.hpp"
#include "bicameral/language_model.hpp"

namespace bicameral {

struct DoppelConfig {
  std::size_t d_shadow = 32;
  std::size_t n_objectives = 1;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;

  void validate() const;
  bool operator==(const DoppelConfig&) const = default;
};

/// Linear map applied to concat(tap_{k-1}, shadow_{k-1}) before shadow module k.
struct FusionLayer {
  Tensor weight;  // (d_model + d_shadow) x d_shadow
  Tensor bias;    // d_shadow
};

/// The shadow tower. Shadow module k (1..N) reads
///   W_k · concat(tap_{k-1}, shadow_{k-1}) + b_k,
/// where shadow_0 is the projected embedding tap. A normalized linear head
/// with sigmoid maps the last shadow output to n scores per position.
class Doppelganger {
 public:
  Doppelganger(const DoppelConfig& cfg, const LMConfig& lm, std::uint64_t seed);

  Doppelganger(Doppelganger&&) noexcept = default;
  Doppelganger& operator=(Doppelganger&&) noexcept = default;
  Doppelganger(const Doppelganger&) = delete;
  Doppelganger& operator=(const Doppelganger&) = delete;

  Doppelganger clone() const;

  const DoppelConfig& config() const { return cfg_; }
  std::size_t n_layers() const { return layers_.size(); }
  std::size_t lm_width() const { return d_model_; }

  // scores: T x n, each strictly inside (0, 1) for finite inputs.
  Tensor forward(const LayerTaps& taps) const;

  NamedTensors parameters() const;  // names prefixed `doppel.`
  std::vector<Tensor> parameter_tensors() const;
  std::size_t parameter_count() const;
  std::uint64_t checksum() const;

  Tensor& input_proj_weight() { return in_w_; }
  Tensor& input_proj_bias() { return in_b_; }
  std::vector<FusionLayer>& fusion() { return fusion_; }
  std::vector<AttentionModuleParams>& layers() { return layers_; }
  Tensor& final_norm_gain() { return lnf_gain_; }
  Tensor& final_norm_bias() { return lnf_bias_; }
  Tensor& head_weight() { return head_w_; }
  Tensor& head_bias() { return head_b_; }

 private:
  DoppelConfig cfg_;
  std::size_t d_model_;
  Tensor in_w_, in_b_;
  std::vector<FusionLayer> fusion_;
  std::vector<AttentionModuleParams> layers_;
  Tensor lnf_gain_, lnf_bias_;
  Tensor head_w_, head_b_;
};

/// Frozen language component paired with its Doppelgänger.
struct BicameralModel {
  LanguageModel language;
  Doppelganger doppel;

  BicameralModel(LanguageModel lm, Doppelganger dm);

  struct Output {
    Tensor logits;
    LayerTaps taps;
    Tensor scores;
  };

  // One language pass serving both the logits and the scores.
  Output forward(const TokenIds& tokens) const;
  Tensor score_prefixes(const TokenIds& tokens) const;
};

/// Checks the 2-layer bicameral loss (next-token CE plus score BCE) against
/// finite differences with every language and Doppelgänger parameter
/// unfrozen, so the gradient path through the taps is exercised.
std::vector<GradcheckResult> gradcheck_bicameral(std::uint64_t seed,
                                                 const GradcheckOptions& opts = {});

}  // namespace bicameral
