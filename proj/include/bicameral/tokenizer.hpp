#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bicameral {

using TokenIds = std::vector<std::int64_t>;

/// Character-level vocabulary: token id i is the i-th symbol (one UTF-8
/// code point) of the alphabet.
///
/// Alphabet files hold one symbol per line. Escapes `\n`, `\t`, `\s` (space)
/// and `\\` name characters that cannot sit alone on a line.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> symbols);

  static Alphabet load(const std::filesystem::path& path);
  static Alphabet parse(std::string_view text);
  // Sorted distinct code points of `text`.
  static Alphabet from_text(std::string_view text);

  std::string serialize() const;

  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::optional<std::int64_t> find(std::string_view symbol) const;

  // Throws std::invalid_argument on a character outside the alphabet.
  TokenIds encode(std::string_view text) const;
  std::string decode(std::int64_t id) const;
  std::string decode(const TokenIds& ids) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::int64_t> index_;
};

// Splits UTF-8 text into code points (as byte strings).
std::vector<std::string> utf8_code_points(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace bicameral
