#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bicameral/doppelganger.hpp"
#include "bicameral/generation.hpp"
#include "bicameral/language_model.hpp"
#include "bicameral/training.hpp"

namespace bicameral {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative paths in a config file are resolved against the file's directory.
struct RunPaths {
  std::filesystem::path alphabet;
  std::filesystem::path corpus;
  std::filesystem::path train_data;
  std::filesystem::path val_data;
  std::filesystem::path lm_checkpoint;         // written by pretrain
  std::filesystem::path frozen_checkpoint;     // written by freeze
  std::filesystem::path bicameral_checkpoint;  // written by train-doppel
  std::filesystem::path pretrain_log;
  std::filesystem::path doppel_log;
  std::filesystem::path report;  // lemma-demo
};

struct TaskConfig {
  std::vector<ObjectiveSpec> objectives;
  CorpusSource source = CorpusSource::kText;
  std::size_t num_sequences = 800;
  std::size_t min_len = 16;
  std::size_t max_len = 48;
  double val_fraction = 0.2;
};

struct GenerateConfig {
  std::string prompt = "the ";
  std::size_t max_new = 32;
  std::string format = "jsonl";
};

struct RunConfig {
  std::uint64_t seed = 0;
  RunPaths paths;
  LMConfig lm;
  bool vocab_from_alphabet = true;  // lm.vocab_size absent from the file
  DoppelConfig doppel;
  PretrainConfig pretrain;
  DoppelTrainConfig doppel_train;
  TaskConfig task;
  SamplerConfig sampler;
  GenerateConfig generate;
  std::size_t lemma_instances = 200;
};

// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

/// Seed for one pipeline stage, derived from the run seed so stages draw
/// independent streams.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

// Re-derives every per-stage seed from c.seed (call after overriding it).
void apply_seed(RunConfig& c);

}  // namespace bicameral
