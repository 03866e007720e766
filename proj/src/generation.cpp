#include "bicameral/generation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace bicameral {

SamplingStrategy sampling_strategy_from_string(const std::string& s) {
  if (s == "greedy") return SamplingStrategy::kGreedy;
  if (s == "temperature") return SamplingStrategy::kTemperature;
  if (s == "top_k" || s == "top-k") return SamplingStrategy::kTopK;
  throw std::invalid_argument("unknown sampling strategy '" + s + "'");
}

void SamplerConfig::validate(std::size_t vocab_size) const {
  if (strategy == SamplingStrategy::kGreedy) return;
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("sampler temperature must be positive and finite");
  }
  if (strategy == SamplingStrategy::kTopK && (k < 1 || k > vocab_size)) {
    throw std::invalid_argument("top_k requires 1 <= k <= vocab size (" +
                                std::to_string(vocab_size) + ")");
  }
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::int64_t categorical(std::span<const double> logits, std::span<const std::size_t> candidates,
                         double temperature, std::mt19937_64& rng) {
  double mx = -INFINITY;
  for (auto i : candidates) mx = std::max(mx, logits[i]);
  std::vector<double> weights(candidates.size());
  double total = 0.0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    weights[j] = std::exp((logits[candidates[j]] - mx) / temperature);
    total += weights[j];
  }
  const double u = uniform01(rng) * total;
  double cum = 0.0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    cum += weights[j];
    if (u < cum) return static_cast<std::int64_t>(candidates[j]);
  }
  // u landed on the rounding slack at the top; take the last positive weight.
  for (std::size_t j = candidates.size(); j-- > 0;)
    if (weights[j] > 0.0) return static_cast<std::int64_t>(candidates[j]);
  return static_cast<std::int64_t>(candidates.front());
}

}  // namespace

std::int64_t sample(std::span<const double> logits, const SamplerConfig& cfg,
                    std::mt19937_64& rng) {
  if (logits.empty()) throw std::invalid_argument("sample: empty logits");
  cfg.validate(logits.size());
  switch (cfg.strategy) {
    case SamplingStrategy::kGreedy: {
      // max_element returns the first maximum, i.e. the lowest id on ties.
      return std::max_element(logits.begin(), logits.end()) - logits.begin();
    }
    case SamplingStrategy::kTemperature: {
      std::vector<std::size_t> all(logits.size());
      std::iota(all.begin(), all.end(), 0);
      return categorical(logits, all, cfg.temperature, rng);
    }
    case SamplingStrategy::kTopK: {
      std::vector<std::size_t> order(logits.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
      order.resize(cfg.k);
      return categorical(logits, order, cfg.temperature, rng);
    }
  }
  return 0;
}

nlohmann::json to_json(const GenerationEvent& e) {
  return {{"pos", e.pos}, {"token", e.token}, {"id", e.id}, {"scores", e.scores}};
}

// ---------------------------------------------------------------------------

GenerationSession::GenerationSession(const BicameralModel& bm, const Alphabet& alphabet,
                                     TokenIds prompt, std::size_t max_new, SamplerConfig sampler,
                                     bool score)
    : bm_(bm),
      alphabet_(alphabet),
      seq_(std::move(prompt)),
      prompt_len_(seq_.size()),
      max_new_(max_new),
      sampler_(sampler),
      score_(score),
      rng_(sampler.seed) {
  const auto& cfg = bm_.language.config();
  if (seq_.empty()) throw std::invalid_argument("generate: prompt is empty");
  for (auto id : seq_) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw std::out_of_range("generate: prompt id " + std::to_string(id) + " outside vocabulary");
    }
  }
  if (prompt_len_ + max_new_ > cfg.max_seq_len) {
    throw std::length_error("generate: prompt length " + std::to_string(prompt_len_) +
                            " + max_new " + std::to_string(max_new_) + " exceeds max_seq_len " +
                            std::to_string(cfg.max_seq_len));
  }
  if (alphabet_.size() != cfg.vocab_size) {
    throw std::invalid_argument("generate: alphabet does not match the model vocabulary");
  }
  sampler_.validate(cfg.vocab_size);
}

void GenerationSession::run_pass() {
  auto lm = bm_.language.forward(seq_);
  ++passes_;
  last_logits_ = lm.logits;
  if (score_) last_scores_ = bm_.doppel.forward(lm.taps);
}

GenerationEvent GenerationSession::make_event(std::size_t pos, bool generated) const {
  GenerationEvent e;
  e.pos = pos;
  e.id = seq_[pos];
  e.token = alphabet_.decode(e.id);
  e.generated = generated;
  if (score_) {
    const std::size_t n = last_scores_.cols();
    e.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.scores[i] = last_scores_.at(pos, i);
  }
  return e;
}

std::optional<GenerationEvent> GenerationSession::next() {
  if (passes_ == 0) run_pass();
  if (emitted_ < prompt_len_) return make_event(emitted_++, false);
  if (generated_ >= max_new_) return std::nullopt;

  const std::size_t v = last_logits_.cols();
  const auto all = last_logits_.data();
  const auto last_row = all.subspan((last_logits_.rows() - 1) * v, v);
  seq_.push_back(sample(last_row, sampler_, rng_));
  ++generated_;
  run_pass();
  return make_event(emitted_++, true);
}

std::vector<GenerationEvent> generate(const BicameralModel& bm, const Alphabet& alphabet,
                                      const TokenIds& prompt, std::size_t max_new,
                                      const SamplerConfig& sampler, bool score) {
  GenerationSession session(bm, alphabet, prompt, max_new, sampler, score);
  std::vector<GenerationEvent> events;
  while (auto e = session.next()) events.push_back(std::move(*e));
  return events;
}

std::string render_plain(const std::vector<GenerationEvent>& events) {
  std::string out;
  bool in_generation = false;
  char buf[32];
  for (const auto& e : events) {
    if (e.generated && !in_generation) {
      out += " ||| ";
      in_generation = true;
    }
    out += e.token == "\n" ? "\\n" : e.token;
    if (!e.scores.empty()) {
      out += "⟨";
      for (std::size_t i = 0; i < e.scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s%.2f", i ? "," : "", e.scores[i]);
        out += buf;
      }
      out += "⟩";
    }
  }
  out += '\n';
  return out;
}

}  // namespace bicameral
