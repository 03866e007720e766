#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bicameral/doppelganger.hpp"
#include "bicameral/optim.hpp"
#include "bicameral/tokenizer.hpp"

namespace bicameral {

/// Token ids with one label row per position: labels[t][i] is the ground
/// truth of objective i for the prefix tokens[0..t].
struct SupervisedSequence {
  TokenIds tokens;
  std::vector<std::vector<double>> labels;

  std::size_t objectives() const { return labels.empty() ? 0 : labels.front().size(); }
  // Throws std::invalid_argument unless labels are T x n with values in [0, 1].
  void validate(std::size_t n) const;
  Tensor label_tensor() const;
};

using Dataset = std::vector<SupervisedSequence>;

enum class TaskKind { kForbiddenToken, kPrefixParity, kSentimentLexicon };

TaskKind task_kind_from_string(const std::string& s);
std::string to_string(TaskKind k);

/// One supervision signal, computed as a pure function of the prefix.
struct ObjectiveSpec {
  TaskKind kind = TaskKind::kForbiddenToken;
  // forbidden-token: label 1 once any of these symbols has appeared.
  // prefix-parity: label = parity of the count of these symbols so far.
  std::vector<std::string> symbols;
  // sentiment-lexicon: words (letter runs) closed by a non-letter are matched;
  // label 1 if positive matches outnumber negative ones, 0 if fewer, 0.5 on a tie.
  std::vector<std::string> positive_words;
  std::vector<std::string> negative_words;
};

enum class CorpusSource { kText, kUniform };

struct SyntheticTaskSpec {
  std::vector<ObjectiveSpec> objectives;
  CorpusSource source = CorpusSource::kText;
  std::string corpus_text;  // used when source == kText
  std::size_t num_sequences = 800;
  std::size_t min_len = 16;
  std::size_t max_len = 48;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
};

// Per-position labels (T x n) for every objective of `spec`.
std::vector<std::vector<double>> prefix_labels(const std::vector<ObjectiveSpec>& objectives,
                                               const TokenIds& tokens, const Alphabet& alphabet);

DatasetSplit generate_synthetic_dataset(const SyntheticTaskSpec& spec, const Alphabet& alphabet);

// JSON lines: {"tokens":[ids],"labels":[[floats x n]...]}
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);
nlohmann::json to_json(const SupervisedSequence& s);
SupervisedSequence sequence_from_json(const nlohmann::json& j);

struct DoppelTrainConfig {
  AdamConfig adam{};
  std::size_t batch_size = 16;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the pre-training baseline
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::vector<double> val_acc;
};

struct DoppelTrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

nlohmann::json to_json(const EpochRecord& r);

struct CalibrationBucket {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_score = 0.0;
  double mean_label = 0.0;
};

struct Metrics {
  double bce = 0.0;
  std::vector<double> accuracy;  // per objective, threshold 0.5
  std::vector<CalibrationBucket> calibration;
  std::size_t positions = 0;
};

inline constexpr std::size_t kCalibrationBuckets = 10;

/// Scores every sequence without touching parameters.
Metrics evaluate(const BicameralModel& bm, const Dataset& data);

/// Trains only the Doppelgänger, by mean BCE over positions x objectives.
/// The language component must be frozen (ContractError otherwise); its
/// taps are computed once per sequence and reused across epochs. Early
/// stopping on validation BCE restores the best-validation parameters.
DoppelTrainLog train_doppelganger(BicameralModel& bm, const Dataset& train, const Dataset& val,
                                  const DoppelTrainConfig& cfg);

}  // namespace bicameral
