#include "bicameral/config.hpp"

#include <fstream>
#include <set>

#include "bicameral/checksum.hpp"

namespace bicameral {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError(section + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + section);
    }
  }
}

template <typename T>
void read(const json& j, const std::string& section, const std::string& key, T& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(section + "." + key + " must be a boolean");
    out = v.get<bool>();
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(section + "." + key + " must be a non-negative integer");
    }
    out = v.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(section + "." + key + " must be a number");
    out = v.get<T>();
  } else {
    if (!v.is_string()) throw ConfigError(section + "." + key + " must be a string");
    out = v.get<T>();
  }
}

void read_path(const json& j, const std::string& key, const std::filesystem::path& base,
               std::filesystem::path& out) {
  std::string s;
  read(j, "paths", key, s);
  if (s.empty()) return;
  const std::filesystem::path p(s);
  out = p.is_absolute() || base.empty() ? p : base / p;
}

std::vector<std::string> read_strings(const json& j, const std::string& section,
                                      const std::string& key) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(section + "." + key + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError(section + "." + key + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

ObjectiveSpec read_objective(const json& j) {
  check_keys(j, "task.objectives[]", {"kind", "symbols", "positive_words", "negative_words"});
  ObjectiveSpec o;
  std::string kind = "forbidden-token";
  read(j, "task.objectives[]", "kind", kind);
  try {
    o.kind = task_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  o.symbols = read_strings(j, "task.objectives[]", "symbols");
  o.positive_words = read_strings(j, "task.objectives[]", "positive_words");
  o.negative_words = read_strings(j, "task.objectives[]", "negative_words");
  if (o.kind != TaskKind::kSentimentLexicon && o.symbols.empty()) {
    throw ConfigError("task objective '" + kind + "' needs a non-empty symbols list");
  }
  return o;
}

json objective_json(const ObjectiveSpec& o) {
  json j = {{"kind", to_string(o.kind)}};
  if (o.kind == TaskKind::kSentimentLexicon) {
    j["positive_words"] = o.positive_words;
    j["negative_words"] = o.negative_words;
  } else {
    j["symbols"] = o.symbols;
  }
  return j;
}

std::string strategy_name(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::kGreedy: return "greedy";
    case SamplingStrategy::kTemperature: return "temperature";
    case SamplingStrategy::kTopK: return "top_k";
  }
  return "greedy";
}

}  // namespace

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
  std::uint64_t z = fnv1a64({reinterpret_cast<const unsigned char*>(stage.data()), stage.size()});
  z ^= seed + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void apply_seed(RunConfig& c) {
  c.pretrain.seed = stage_seed(c.seed, "pretrain");
  c.doppel_train.seed = stage_seed(c.seed, "doppel-train");
  c.sampler.seed = stage_seed(c.seed, "sampler");
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "config", {"seed", "paths", "lm", "doppel", "pretrain", "doppel_train", "task",
                           "sampler", "generate", "lemma"});
  RunConfig c;
  if (!j.contains("seed")) throw ConfigError("config must set an explicit seed");
  read(j, "config", "seed", c.seed);

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    check_keys(p, "paths", {"alphabet", "corpus", "train_data", "val_data", "lm_checkpoint",
                            "frozen_checkpoint", "bicameral_checkpoint", "pretrain_log",
                            "doppel_log", "report"});
    read_path(p, "alphabet", base_dir, c.paths.alphabet);
    read_path(p, "corpus", base_dir, c.paths.corpus);
    read_path(p, "train_data", base_dir, c.paths.train_data);
    read_path(p, "val_data", base_dir, c.paths.val_data);
    read_path(p, "lm_checkpoint", base_dir, c.paths.lm_checkpoint);
    read_path(p, "frozen_checkpoint", base_dir, c.paths.frozen_checkpoint);
    read_path(p, "bicameral_checkpoint", base_dir, c.paths.bicameral_checkpoint);
    read_path(p, "pretrain_log", base_dir, c.paths.pretrain_log);
    read_path(p, "doppel_log", base_dir, c.paths.doppel_log);
    read_path(p, "report", base_dir, c.paths.report);
  }

  if (j.contains("lm")) {
    const auto& l = j.at("lm");
    check_keys(l, "lm", {"vocab_size", "d_model", "n_layers", "n_heads", "d_ff", "max_seq_len"});
    c.vocab_from_alphabet = !l.contains("vocab_size");
    read(l, "lm", "vocab_size", c.lm.vocab_size);
    read(l, "lm", "d_model", c.lm.d_model);
    read(l, "lm", "n_layers", c.lm.n_layers);
    read(l, "lm", "n_heads", c.lm.n_heads);
    read(l, "lm", "d_ff", c.lm.d_ff);
    read(l, "lm", "max_seq_len", c.lm.max_seq_len);
  }

  bool explicit_objectives = false;
  if (j.contains("doppel")) {
    const auto& d = j.at("doppel");
    check_keys(d, "doppel", {"d_shadow", "n_objectives", "n_heads", "d_ff"});
    explicit_objectives = d.contains("n_objectives");
    read(d, "doppel", "d_shadow", c.doppel.d_shadow);
    read(d, "doppel", "n_objectives", c.doppel.n_objectives);
    read(d, "doppel", "n_heads", c.doppel.n_heads);
    read(d, "doppel", "d_ff", c.doppel.d_ff);
  }

  auto read_adam = [](const json& s, const std::string& section, AdamConfig& a) {
    read(s, section, "lr", a.lr);
    read(s, section, "beta1", a.beta1);
    read(s, section, "beta2", a.beta2);
    read(s, section, "eps", a.eps);
  };
  if (j.contains("pretrain")) {
    const auto& s = j.at("pretrain");
    check_keys(s, "pretrain", {"lr", "beta1", "beta2", "eps", "batch_size", "epochs", "window"});
    read_adam(s, "pretrain", c.pretrain.adam);
    read(s, "pretrain", "batch_size", c.pretrain.batch_size);
    read(s, "pretrain", "epochs", c.pretrain.epochs);
    read(s, "pretrain", "window", c.pretrain.window);
  }
  if (j.contains("doppel_train")) {
    const auto& s = j.at("doppel_train");
    check_keys(s, "doppel_train",
               {"lr", "beta1", "beta2", "eps", "batch_size", "max_epochs", "patience"});
    read_adam(s, "doppel_train", c.doppel_train.adam);
    read(s, "doppel_train", "batch_size", c.doppel_train.batch_size);
    read(s, "doppel_train", "max_epochs", c.doppel_train.max_epochs);
    read(s, "doppel_train", "patience", c.doppel_train.patience);
  }

  c.task.objectives = {ObjectiveSpec{TaskKind::kForbiddenToken, {"w", "y"}, {}, {}}};
  if (j.contains("task")) {
    const auto& t = j.at("task");
    check_keys(t, "task",
               {"objectives", "source", "num_sequences", "min_len", "max_len", "val_fraction"});
    if (t.contains("objectives")) {
      if (!t.at("objectives").is_array() || t.at("objectives").empty()) {
        throw ConfigError("task.objectives must be a non-empty array");
      }
      c.task.objectives.clear();
      for (const auto& o : t.at("objectives")) c.task.objectives.push_back(read_objective(o));
    }
    std::string source = "text";
    read(t, "task", "source", source);
    if (source == "text") {
      c.task.source = CorpusSource::kText;
    } else if (source == "uniform") {
      c.task.source = CorpusSource::kUniform;
    } else {
      throw ConfigError("task.source must be \"text\" or \"uniform\"");
    }
    read(t, "task", "num_sequences", c.task.num_sequences);
    read(t, "task", "min_len", c.task.min_len);
    read(t, "task", "max_len", c.task.max_len);
    read(t, "task", "val_fraction", c.task.val_fraction);
  }
  if (explicit_objectives && c.doppel.n_objectives != c.task.objectives.size()) {
    throw ConfigError("doppel.n_objectives disagrees with the number of task objectives");
  }
  c.doppel.n_objectives = c.task.objectives.size();

  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    check_keys(s, "sampler", {"strategy", "temperature", "k"});
    std::string strategy = "greedy";
    read(s, "sampler", "strategy", strategy);
    try {
      c.sampler.strategy = sampling_strategy_from_string(strategy);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    read(s, "sampler", "temperature", c.sampler.temperature);
    read(s, "sampler", "k", c.sampler.k);
  }
  if (j.contains("generate")) {
    const auto& g = j.at("generate");
    check_keys(g, "generate", {"prompt", "max_new", "format"});
    read(g, "generate", "prompt", c.generate.prompt);
    read(g, "generate", "max_new", c.generate.max_new);
    read(g, "generate", "format", c.generate.format);
  }
  if (j.contains("lemma")) {
    check_keys(j.at("lemma"), "lemma", {"instances"});
    read(j.at("lemma"), "lemma", "instances", c.lemma_instances);
  }

  // Semantic checks that do not need the alphabet.
  try {
    // The vocabulary may still come from the alphabet; check the rest now.
    LMConfig shape = c.lm;
    if (c.vocab_from_alphabet) shape.vocab_size = 1;
    shape.validate();
    c.doppel.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.task.min_len < 1 || c.task.min_len > c.task.max_len) {
    throw ConfigError("task needs 1 <= min_len <= max_len");
  }
  if (c.task.max_len > c.lm.max_seq_len) throw ConfigError("task.max_len exceeds lm.max_seq_len");
  if (!(c.task.val_fraction >= 0.0 && c.task.val_fraction < 1.0)) {
    throw ConfigError("task.val_fraction must lie in [0, 1)");
  }
  if (c.pretrain.window < 1 || c.pretrain.window > c.lm.max_seq_len) {
    throw ConfigError("pretrain.window must lie in [1, lm.max_seq_len]");
  }
  if (c.pretrain.batch_size == 0 || c.doppel_train.batch_size == 0) {
    throw ConfigError("batch_size must be >= 1");
  }
  for (const auto* a : {&c.pretrain.adam, &c.doppel_train.adam}) {
    if (!(a->lr > 0.0) || !(a->beta1 >= 0.0 && a->beta1 < 1.0) ||
        !(a->beta2 >= 0.0 && a->beta2 < 1.0) || !(a->eps > 0.0)) {
      throw ConfigError("optimizer settings out of range");
    }
  }
  if (c.generate.format != "jsonl" && c.generate.format != "plain") {
    throw ConfigError("generate.format must be \"jsonl\" or \"plain\"");
  }
  apply_seed(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json paths = json::object();
  auto put = [&](const char* key, const std::filesystem::path& p) {
    if (!p.empty()) paths[key] = p.generic_string();
  };
  put("alphabet", c.paths.alphabet);
  put("corpus", c.paths.corpus);
  put("train_data", c.paths.train_data);
  put("val_data", c.paths.val_data);
  put("lm_checkpoint", c.paths.lm_checkpoint);
  put("frozen_checkpoint", c.paths.frozen_checkpoint);
  put("bicameral_checkpoint", c.paths.bicameral_checkpoint);
  put("pretrain_log", c.paths.pretrain_log);
  put("doppel_log", c.paths.doppel_log);
  put("report", c.paths.report);

  json objectives = json::array();
  for (const auto& o : c.task.objectives) objectives.push_back(objective_json(o));

  return {
      {"seed", c.seed},
      {"paths", paths},
      {"lm",
       {{"vocab_size", c.lm.vocab_size},
        {"d_model", c.lm.d_model},
        {"n_layers", c.lm.n_layers},
        {"n_heads", c.lm.n_heads},
        {"d_ff", c.lm.d_ff},
        {"max_seq_len", c.lm.max_seq_len}}},
      {"doppel",
       {{"d_shadow", c.doppel.d_shadow},
        {"n_objectives", c.doppel.n_objectives},
        {"n_heads", c.doppel.n_heads},
        {"d_ff", c.doppel.d_ff}}},
      {"pretrain",
       {{"lr", c.pretrain.adam.lr},
        {"beta1", c.pretrain.adam.beta1},
        {"beta2", c.pretrain.adam.beta2},
        {"eps", c.pretrain.adam.eps},
        {"batch_size", c.pretrain.batch_size},
        {"epochs", c.pretrain.epochs},
        {"window", c.pretrain.window}}},
      {"doppel_train",
       {{"lr", c.doppel_train.adam.lr},
        {"beta1", c.doppel_train.adam.beta1},
        {"beta2", c.doppel_train.adam.beta2},
        {"eps", c.doppel_train.adam.eps},
        {"batch_size", c.doppel_train.batch_size},
        {"max_epochs", c.doppel_train.max_epochs},
        {"patience", c.doppel_train.patience}}},
      {"task",
       {{"objectives", objectives},
        {"source", c.task.source == CorpusSource::kText ? "text" : "uniform"},
        {"num_sequences", c.task.num_sequences},
        {"min_len", c.task.min_len},
        {"max_len", c.task.max_len},
        {"val_fraction", c.task.val_fraction}}},
      {"sampler",
       {{"strategy", strategy_name(c.sampler.strategy)},
        {"temperature", c.sampler.temperature},
        {"k", c.sampler.k}}},
      {"generate",
       {{"prompt", c.generate.prompt},
        {"max_new", c.generate.max_new},
        {"format", c.generate.format}}},
      {"lemma", {{"instances", c.lemma_instances}}},
  };
}

}  // namespace bicameral
