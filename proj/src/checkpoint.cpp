#include "bicameral/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "bicameral/checksum.hpp"

namespace bicameral {

namespace {

constexpr char kMagic[8] = {'B', 'I', 'C', 'A', 'M', 'R', 'L', '\0'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw CheckpointError("cannot open " + path.string() + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  template <typename U>
  void uint(U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, sizeof(U));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void finish() {
    out_.flush();
    if (!out_) throw CheckpointError("write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw CheckpointError("cannot open " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CheckpointError("truncated checkpoint");
  }
  template <typename U>
  U uint() {
    unsigned char b[sizeof(U)];
    bytes(b, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
};

// Record sizes come from untrusted bytes; bound them before allocating.
constexpr std::uint64_t kMaxRecordValues = 1ull << 32;
constexpr std::uint64_t kMaxHeaderBytes = 1ull << 26;

}  // namespace

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file) {
  Writer w(path);
  w.bytes(kMagic, sizeof(kMagic));
  w.uint<std::uint32_t>(kCheckpointVersion);
  const std::string header = file.header.dump();
  w.uint<std::uint64_t>(header.size());
  w.bytes(header.data(), header.size());
  w.uint<std::uint64_t>(file.tensors.size());
  std::uint64_t checksum = kFnvOffset;
  for (const auto& [name, t] : file.tensors) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.uint<std::uint64_t>(d);
    for (double v : t.data()) w.f64(v);
    checksum = checksum_values(t.data(), checksum);
  }
  w.uint<std::uint64_t>(checksum);
  w.finish();
}

CheckpointFile read_checkpoint_file(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + " is not a bicameral checkpoint");
  }
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint format version " + std::to_string(version) +
                                 " (this build reads version " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = r.uint<std::uint64_t>();
  if (header_len > kMaxHeaderBytes) throw CheckpointError("implausible header length");
  std::string header(header_len, '\0');
  r.bytes(header.data(), header.size());

  CheckpointFile file;
  try {
    file.header = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  const auto count = r.uint<std::uint64_t>();
  std::uint64_t checksum = kFnvOffset;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.uint<std::uint32_t>();
    std::string name(name_len, '\0');
    r.bytes(name.data(), name.size());
    const auto rank = r.uint<std::uint32_t>();
    if (rank > 8) throw CheckpointError("record " + name + " has implausible rank");
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& d : shape) {
      d = r.uint<std::uint64_t>();
      n *= d;
      if (n > kMaxRecordValues) throw CheckpointError("record " + name + " is too large");
    }
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(r.uint<std::uint64_t>());
    checksum = checksum_values(values, checksum);
    file.tensors.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  const auto stored = r.uint<std::uint64_t>();
  if (stored != checksum) throw CheckpointError("payload checksum mismatch in " + path.string());
  if (!r.at_end()) throw CheckpointError("trailing bytes after checkpoint checksum");
  return file;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const LMConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model}, {"n_layers", c.n_layers},
          {"n_heads", c.n_heads},       {"d_ff", c.d_ff},       {"max_seq_len", c.max_seq_len}};
}

nlohmann::json to_json(const DoppelConfig& c) {
  return {{"d_shadow", c.d_shadow},
          {"n_objectives", c.n_objectives},
          {"n_heads", c.n_heads},
          {"d_ff", c.d_ff}};
}

LMConfig lm_config_from_json(const nlohmann::json& j) {
  LMConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  return c;
}

DoppelConfig doppel_config_from_json(const nlohmann::json& j) {
  DoppelConfig c;
  c.d_shadow = j.value("d_shadow", c.d_shadow);
  c.n_objectives = j.value("n_objectives", c.n_objectives);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const LanguageModel& lm,
                     const Doppelganger* doppel, const Alphabet& alphabet,
                     const nlohmann::json& run_config) {
  if (alphabet.size() != lm.config().vocab_size) {
    throw CheckpointError("alphabet size " + std::to_string(alphabet.size()) +
                          " does not match vocab_size " + std::to_string(lm.config().vocab_size));
  }
  CheckpointFile file;
  file.header = {
      {"lm", to_json(lm.config())},
      {"doppel", doppel ? to_json(doppel->config()) : nlohmann::json(nullptr)},
      {"alphabet", alphabet.symbols()},
      {"frozen", lm.frozen()},
      {"language_checksum", lm.checksum()},
      {"run_config", run_config},
  };
  file.tensors = lm.parameters();
  if (doppel) {
    auto dp = doppel->parameters();
    file.tensors.insert(file.tensors.end(), dp.begin(), dp.end());
  }
  write_checkpoint_file(path, file);
}

namespace {

void copy_into(NamedTensors targets, std::map<std::string, Tensor>& records) {
  for (auto& [name, t] : targets) {
    auto it = records.find(name);
    if (it == records.end()) throw CheckpointError("checkpoint lacks parameter " + name);
    if (it->second.shape() != t.shape()) {
      throw CheckpointError("parameter " + name + " has shape " + shape_str(it->second.shape()) +
                            ", model expects " + shape_str(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(it->second.data().begin(), it->second.data().end(), dst.begin());
    records.erase(it);
  }
}

}  // namespace

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  auto file = read_checkpoint_file(path);
  const auto& h = file.header;
  try {
    const LMConfig lc = lm_config_from_json(h.at("lm"));
    Alphabet alphabet(h.at("alphabet").get<std::vector<std::string>>());
    if (alphabet.size() != lc.vocab_size) {
      throw CheckpointError("alphabet size " + std::to_string(alphabet.size()) +
                            " does not match vocab_size " + std::to_string(lc.vocab_size));
    }
    std::map<std::string, Tensor> records;
    for (auto& [name, t] : file.tensors) {
      if (!records.emplace(name, t).second) throw CheckpointError("duplicate record " + name);
    }

    LanguageModel lm(lc, 0);
    copy_into(lm.parameters(), records);
    if (h.at("frozen").get<bool>()) {
      lm.restore_frozen(h.at("language_checksum").get<std::uint64_t>());
    }

    std::optional<Doppelganger> doppel;
    if (!h.at("doppel").is_null()) {
      doppel.emplace(doppel_config_from_json(h.at("doppel")), lc, 0);
      copy_into(doppel->parameters(), records);
    }
    if (!records.empty()) {
      throw CheckpointError("checkpoint has unexpected parameter " + records.begin()->first);
    }
    return ModelCheckpoint{std::move(lm), std::move(doppel), std::move(alphabet),
                           h.value("run_config", nlohmann::json::object())};
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
}

}  // namespace bicameral
