#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "bicameral/doppelganger.hpp"
#include "bicameral/language_model.hpp"
#include "bicameral/tokenizer.hpp"

namespace bicameral {

// Binary checkpoint layout (all integers little-endian):
//
//   magic        8 bytes  "BICAMRL\0"
//   version      u32
//   header_len   u64, followed by a UTF-8 JSON header (configs, alphabet,
//                frozen flag and checksum, run config)
//   count        u64, followed by `count` records:
//                  name_len u32, name bytes, rank u32, dims u64[rank],
//                  payload f64[prod(dims)]
//   checksum     u64 FNV-1a over every payload byte, in record order
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A readable file written by an incompatible format version.
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct CheckpointFile {
  nlohmann::json header;
  NamedTensors tensors;
};

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file);
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);

nlohmann::json to_json(const LMConfig& c);
nlohmann::json to_json(const DoppelConfig& c);
LMConfig lm_config_from_json(const nlohmann::json& j);
DoppelConfig doppel_config_from_json(const nlohmann::json& j);

struct ModelCheckpoint {
  LanguageModel language;
  std::optional<Doppelganger> doppel;
  Alphabet alphabet;
  nlohmann::json run_config;
};

void save_checkpoint(const std::filesystem::path& path, const LanguageModel& lm,
                     const Doppelganger* doppel, const Alphabet& alphabet,
                     const nlohmann::json& run_config = nlohmann::json::object());

/// Restores models bitwise. A checkpoint saved frozen comes back frozen, and
/// its recorded language checksum is verified.
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bicameral
