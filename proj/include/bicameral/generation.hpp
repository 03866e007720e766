#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bicameral/doppelganger.hpp"
#include "bicameral/tokenizer.hpp"

namespace bicameral {

enum class SamplingStrategy { kGreedy, kTemperature, kTopK };

SamplingStrategy sampling_strategy_from_string(const std::string& s);

struct SamplerConfig {
  SamplingStrategy strategy = SamplingStrategy::kGreedy;
  double temperature = 1.0;
  std::size_t k = 1;
  std::uint64_t seed = 0;

  void validate(std::size_t vocab_size) const;
};

/// Greedy: argmax, ties to the lowest id. Temperature: categorical draw from
/// softmax(logits / T). Top-k: the same draw restricted to the k largest
/// logits (ties to lower ids) and renormalized.
std::int64_t sample(std::span<const double> logits, const SamplerConfig& cfg,
                    std::mt19937_64& rng);

struct GenerationEvent {
  std::size_t pos = 0;
  std::int64_t id = 0;
  std::string token;
  std::vector<double> scores;  // one per objective; empty when scoring is off
  bool generated = false;      // false for prompt positions
};

nlohmann::json to_json(const GenerationEvent& e);

/// Pull-based token-by-token decoding with concurrent supervision scores.
///
/// The first pull runs one bicameral pass over the prompt and emits one event
/// per prompt position. Every later pull samples from the latest logits,
/// appends the token, and runs a single pass over the extended sequence; that
/// pass yields both the new token's scores and the logits for the next step.
class GenerationSession {
 public:
  GenerationSession(const BicameralModel& bm, const Alphabet& alphabet, TokenIds prompt,
                    std::size_t max_new, SamplerConfig sampler, bool score = true);

  std::optional<GenerationEvent> next();

  const TokenIds& sequence() const { return seq_; }
  // Language passes made by this session.
  std::size_t language_passes() const { return passes_; }

 private:
  void run_pass();
  GenerationEvent make_event(std::size_t pos, bool generated) const;

  const BicameralModel& bm_;
  const Alphabet& alphabet_;
  TokenIds seq_;
  std::size_t prompt_len_;
  std::size_t max_new_;
  SamplerConfig sampler_;
  bool score_;
  std::mt19937_64 rng_;

  Tensor last_logits_;
  Tensor last_scores_;
  std::size_t emitted_ = 0;
  std::size_t generated_ = 0;
  std::size_t passes_ = 0;
};

// Drains a session.
std::vector<GenerationEvent> generate(const BicameralModel& bm, const Alphabet& alphabet,
                                      const TokenIds& prompt, std::size_t max_new,
                                      const SamplerConfig& sampler, bool score = true);

// Plain-text rendering: each token followed by its scores, e.g. `h⟨0.12,0.80⟩`.
std::string render_plain(const std::vector<GenerationEvent>& events);

}  // namespace bicameral
