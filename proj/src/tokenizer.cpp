#include "bicameral/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bicameral {

namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  throw std::invalid_argument("invalid UTF-8 lead byte");
}

std::string unescape(const std::string& line) {
  if (line == "\\n") return "\n";
  if (line == "\\t") return "\t";
  if (line == "\\s") return " ";
  if (line == "\\\\") return "\\";
  return line;
}

std::string escape(const std::string& symbol) {
  if (symbol == "\n") return "\\n";
  if (symbol == "\t") return "\\t";
  if (symbol == " ") return "\\s";
  if (symbol == "\\") return "\\\\";
  return symbol;
}

}  // namespace

std::vector<std::string> utf8_code_points(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t len = utf8_length(static_cast<unsigned char>(text[i]));
    if (i + len > text.size()) throw std::invalid_argument("truncated UTF-8 sequence");
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw std::invalid_argument("alphabet is empty");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (utf8_code_points(symbols_[i]).size() != 1) {
      throw std::invalid_argument("alphabet entry " + std::to_string(i) +
                                  " is not a single character");
    }
    if (!index_.emplace(symbols_[i], static_cast<std::int64_t>(i)).second) {
      throw std::invalid_argument("duplicate alphabet entry at line " + std::to_string(i + 1));
    }
  }
}

Alphabet Alphabet::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

Alphabet Alphabet::parse(std::string_view text) {
  std::vector<std::string> symbols;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    symbols.push_back(unescape(line));
  }
  return Alphabet(std::move(symbols));
}

Alphabet Alphabet::from_text(std::string_view text) {
  const auto cps = utf8_code_points(text);
  std::set<std::string> distinct(cps.begin(), cps.end());
  return Alphabet(std::vector<std::string>(distinct.begin(), distinct.end()));
}

std::string Alphabet::serialize() const {
  std::string out;
  for (const auto& s : symbols_) {
    out += escape(s);
    out += '\n';
  }
  return out;
}

std::optional<std::int64_t> Alphabet::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenIds Alphabet::encode(std::string_view text) const {
  TokenIds ids;
  for (const auto& cp : utf8_code_points(text)) {
    auto id = find(cp);
    if (!id) throw std::invalid_argument("character '" + escape(cp) + "' is not in the alphabet");
    ids.push_back(*id);
  }
  return ids;
}

std::string Alphabet::decode(std::int64_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside alphabet");
  }
  return symbols_[static_cast<std::size_t>(id)];
}

std::string Alphabet::decode(const TokenIds& ids) const {
  std::string out;
  for (auto id : ids) out += decode(id);
  return out;
}

}  // namespace bicameral
