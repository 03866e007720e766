#include "bicameral/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "bicameral/errors.hpp"

namespace bicameral {

void SupervisedSequence::validate(std::size_t n) const {
  if (tokens.empty()) throw std::invalid_argument("supervised sequence has no tokens");
  if (labels.size() != tokens.size()) {
    throw std::invalid_argument("sequence has " + std::to_string(tokens.size()) + " tokens but " +
                                std::to_string(labels.size()) + " label rows");
  }
  for (const auto& row : labels) {
    if (row.size() != n) {
      throw std::invalid_argument("label row has " + std::to_string(row.size()) +
                                  " objectives, expected " + std::to_string(n));
    }
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("label outside [0, 1]");
    }
  }
}

Tensor SupervisedSequence::label_tensor() const {
  const std::size_t n = objectives();
  std::vector<double> flat;
  flat.reserve(labels.size() * n);
  for (const auto& row : labels) flat.insert(flat.end(), row.begin(), row.end());
  return Tensor::from({labels.size(), n}, std::move(flat));
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "forbidden-token") return TaskKind::kForbiddenToken;
  if (s == "prefix-parity") return TaskKind::kPrefixParity;
  if (s == "sentiment-lexicon") return TaskKind::kSentimentLexicon;
  throw std::invalid_argument("unknown task kind '" + s + "'");
}

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::kForbiddenToken: return "forbidden-token";
    case TaskKind::kPrefixParity: return "prefix-parity";
    case TaskKind::kSentimentLexicon: return "sentiment-lexicon";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Prefix label functions
// ---------------------------------------------------------------------------

namespace {

std::set<std::int64_t> symbol_ids(const std::vector<std::string>& symbols,
                                  const Alphabet& alphabet) {
  std::set<std::int64_t> ids;
  for (const auto& s : symbols) {
    auto id = alphabet.find(s);
    if (!id) throw std::invalid_argument("task symbol '" + s + "' is not in the alphabet");
    ids.insert(*id);
  }
  return ids;
}

bool is_letter(const std::string& symbol) {
  if (symbol.size() != 1) return true;  // non-ASCII code points count as letters
  const unsigned char c = static_cast<unsigned char>(symbol[0]);
  return std::isalpha(c) != 0 || c == '\'';
}

std::vector<double> sentiment_labels(const ObjectiveSpec& spec, const TokenIds& tokens,
                                     const Alphabet& alphabet) {
  const std::set<std::string> pos(spec.positive_words.begin(), spec.positive_words.end());
  const std::set<std::string> neg(spec.negative_words.begin(), spec.negative_words.end());
  std::vector<double> out(tokens.size());
  long balance = 0;
  std::string word;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const std::string sym = alphabet.decode(tokens[t]);
    if (is_letter(sym)) {
      for (char c : sym) word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      if (pos.count(word)) ++balance;
      if (neg.count(word)) --balance;
      word.clear();
    }
    out[t] = balance > 0 ? 1.0 : (balance < 0 ? 0.0 : 0.5);
  }
  return out;
}

std::vector<double> objective_labels(const ObjectiveSpec& spec, const TokenIds& tokens,
                                     const Alphabet& alphabet) {
  std::vector<double> out(tokens.size());
  switch (spec.kind) {
    case TaskKind::kForbiddenToken: {
      const auto forbidden = symbol_ids(spec.symbols, alphabet);
      bool seen = false;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        seen = seen || forbidden.count(tokens[t]) > 0;
        out[t] = seen ? 1.0 : 0.0;
      }
      return out;
    }
    case TaskKind::kPrefixParity: {
      const auto counted = symbol_ids(spec.symbols, alphabet);
      std::size_t count = 0;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        count += counted.count(tokens[t]);
        out[t] = static_cast<double>(count % 2);
      }
      return out;
    }
    case TaskKind::kSentimentLexicon:
      return sentiment_labels(spec, tokens, alphabet);
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> prefix_labels(const std::vector<ObjectiveSpec>& objectives,
                                               const TokenIds& tokens, const Alphabet& alphabet) {
  std::vector<std::vector<double>> labels(tokens.size(), std::vector<double>(objectives.size()));
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    const auto column = objective_labels(objectives[i], tokens, alphabet);
    for (std::size_t t = 0; t < tokens.size(); ++t) labels[t][i] = column[t];
  }
  return labels;
}

DatasetSplit generate_synthetic_dataset(const SyntheticTaskSpec& spec, const Alphabet& alphabet) {
  if (spec.objectives.empty()) throw std::invalid_argument("task spec has no objectives");
  if (spec.min_len == 0 || spec.min_len > spec.max_len) {
    throw std::invalid_argument("task spec needs 1 <= min_len <= max_len");
  }
  if (spec.val_fraction < 0.0 || spec.val_fraction >= 1.0) {
    throw std::invalid_argument("val_fraction must lie in [0, 1)");
  }
  TokenIds corpus;
  if (spec.source == CorpusSource::kText) {
    corpus = alphabet.encode(spec.corpus_text);
    if (corpus.empty()) throw std::invalid_argument("synthetic task corpus is empty");
    if (corpus.size() < spec.max_len) {
      throw std::invalid_argument("corpus of " + std::to_string(corpus.size()) +
                                  " tokens is shorter than max_len");
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> len_dist(spec.min_len, spec.max_len);
  std::uniform_int_distribution<std::int64_t> tok_dist(0,
                                                       static_cast<std::int64_t>(alphabet.size()) - 1);
  Dataset all;
  all.reserve(spec.num_sequences);
  for (std::size_t s = 0; s < spec.num_sequences; ++s) {
    const std::size_t len = len_dist(rng);
    TokenIds tokens(len);
    if (spec.source == CorpusSource::kText) {
      std::uniform_int_distribution<std::size_t> start_dist(0, corpus.size() - len);
      const std::size_t start = start_dist(rng);
      std::copy_n(corpus.begin() + static_cast<std::ptrdiff_t>(start), len, tokens.begin());
    } else {
      for (auto& t : tokens) t = tok_dist(rng);
    }
    auto labels = prefix_labels(spec.objectives, tokens, alphabet);
    all.push_back({std::move(tokens), std::move(labels)});
  }

  const auto n_val = static_cast<std::size_t>(
      std::llround(spec.val_fraction * static_cast<double>(spec.num_sequences)));
  DatasetSplit split;
  const auto cut = static_cast<std::ptrdiff_t>(all.size() - n_val);
  split.train.assign(std::make_move_iterator(all.begin()), std::make_move_iterator(all.begin() + cut));
  split.val.assign(std::make_move_iterator(all.begin() + cut), std::make_move_iterator(all.end()));
  return split;
}

// ---------------------------------------------------------------------------
// JSON lines
// ---------------------------------------------------------------------------

nlohmann::json to_json(const SupervisedSequence& s) {
  return {{"tokens", s.tokens}, {"labels", s.labels}};
}

SupervisedSequence sequence_from_json(const nlohmann::json& j) {
  SupervisedSequence s;
  s.tokens = j.at("tokens").get<TokenIds>();
  s.labels = j.at("labels").get<std::vector<std::vector<double>>>();
  return s;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& s : data) out << to_json(s).dump() << '\n';
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      data.push_back(sequence_from_json(nlohmann::json::parse(line)));
      data.back().validate(data.back().objectives());
    } catch (const std::exception& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"val_loss", r.val_loss ? nlohmann::json(*r.val_loss) : nlohmann::json(nullptr)},
          {"val_acc", r.val_acc}};
}

// ---------------------------------------------------------------------------
// Evaluation and training
// ---------------------------------------------------------------------------

namespace {

Metrics evaluate_scores(const std::vector<Tensor>& scores, const Dataset& data, std::size_t n) {
  Metrics m;
  m.accuracy.assign(n, 0.0);
  m.calibration.resize(kCalibrationBuckets);
  for (std::size_t b = 0; b < kCalibrationBuckets; ++b) {
    m.calibration[b].lower = static_cast<double>(b) / kCalibrationBuckets;
    m.calibration[b].upper = static_cast<double>(b + 1) / kCalibrationBuckets;
  }
  double bce_total = 0.0;
  std::vector<std::size_t> correct(n, 0);
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto& seq = data[s];
    const std::size_t t_len = seq.tokens.size();
    bce_total += binary_cross_entropy(scores[s], seq.label_tensor()).item() *
                 static_cast<double>(t_len * n);
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = scores[s].at(t, i);
        const double y = seq.labels[t][i];
        if ((p >= 0.5) == (y >= 0.5)) ++correct[i];
        auto b = std::min(kCalibrationBuckets - 1,
                          static_cast<std::size_t>(p * static_cast<double>(kCalibrationBuckets)));
        auto& bucket = m.calibration[b];
        ++bucket.count;
        bucket.mean_score += p;
        bucket.mean_label += y;
      }
    }
    m.positions += t_len;
  }
  if (m.positions == 0) throw std::invalid_argument("evaluate: empty dataset");
  m.bce = bce_total / static_cast<double>(m.positions * n);
  for (std::size_t i = 0; i < n; ++i)
    m.accuracy[i] = static_cast<double>(correct[i]) / static_cast<double>(m.positions);
  for (auto& bucket : m.calibration) {
    if (bucket.count == 0) continue;
    bucket.mean_score /= static_cast<double>(bucket.count);
    bucket.mean_label /= static_cast<double>(bucket.count);
  }
  return m;
}

Metrics evaluate_cached(const Doppelganger& dm, const std::vector<LayerTaps>& taps,
                        const Dataset& data) {
  std::vector<Tensor> scores;
  scores.reserve(data.size());
  for (const auto& tp : taps) scores.push_back(dm.forward(tp));
  return evaluate_scores(scores, data, dm.config().n_objectives);
}

std::vector<LayerTaps> compute_taps(const LanguageModel& lm, const Dataset& data) {
  std::vector<LayerTaps> taps;
  taps.reserve(data.size());
  for (const auto& s : data) taps.push_back(lm.forward(s.tokens).taps);
  return taps;
}

std::vector<std::vector<double>> snapshot(const Doppelganger& dm) {
  std::vector<std::vector<double>> values;
  for (const auto& [name, t] : dm.parameters()) values.emplace_back(t.data().begin(), t.data().end());
  return values;
}

void restore(Doppelganger& dm, const std::vector<std::vector<double>>& values) {
  auto params = dm.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].second.mutable_data();
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

}  // namespace

Metrics evaluate(const BicameralModel& bm, const Dataset& data) {
  const std::size_t n = bm.doppel.config().n_objectives;
  std::vector<Tensor> scores;
  scores.reserve(data.size());
  for (const auto& s : data) {
    s.validate(n);
    scores.push_back(bm.score_prefixes(s.tokens).detach());
  }
  return evaluate_scores(scores, data, n);
}

DoppelTrainLog train_doppelganger(BicameralModel& bm, const Dataset& train, const Dataset& val,
                                  const DoppelTrainConfig& cfg) {
  if (!bm.language.frozen()) {
    throw ContractError("train_doppelganger: language component must be frozen first");
  }
  if (train.empty()) throw std::invalid_argument("train_doppelganger: empty training set");
  if (cfg.batch_size == 0) throw std::invalid_argument("train_doppelganger: batch_size must be >= 1");
  const std::size_t n = bm.doppel.config().n_objectives;
  for (const auto& s : train) s.validate(n);
  for (const auto& s : val) s.validate(n);

  const std::uint64_t language_before = bm.language.checksum();
  const auto train_taps = compute_taps(bm.language, train);
  const auto val_taps = compute_taps(bm.language, val);

  std::vector<Tensor> labels;
  labels.reserve(train.size());
  for (const auto& s : train) labels.push_back(s.label_tensor());

  DoppelTrainLog log;
  auto record = [&](std::size_t epoch) {
    EpochRecord r;
    r.epoch = epoch;
    r.train_loss = evaluate_cached(bm.doppel, train_taps, train).bce;
    if (!val.empty()) {
      const auto vm = evaluate_cached(bm.doppel, val_taps, val);
      r.val_loss = vm.bce;
      r.val_acc = vm.accuracy;
    }
    log.epochs.push_back(r);
    if (!std::isfinite(r.train_loss) || (r.val_loss && !std::isfinite(*r.val_loss))) {
      throw NumericError("train_doppelganger: non-finite loss in epoch " + std::to_string(epoch));
    }
    return r;
  };
  record(0);

  // Batches group sequences of similar length; batch order is reshuffled
  // every epoch.
  std::vector<std::size_t> by_length(train.size());
  std::iota(by_length.begin(), by_length.end(), 0);
  std::stable_sort(by_length.begin(), by_length.end(), [&](std::size_t a, std::size_t b) {
    return train[a].tokens.size() < train[b].tokens.size();
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < by_length.size(); b += cfg.batch_size) {
    batches.emplace_back(by_length.begin() + static_cast<std::ptrdiff_t>(b),
                         by_length.begin() + static_cast<std::ptrdiff_t>(
                                                 std::min(by_length.size(), b + cfg.batch_size)));
  }

  Adam opt(bm.doppel.parameter_tensors(), cfg.adam);
  std::mt19937_64 rng(cfg.seed);
  double best_val = log.epochs.front().val_loss.value_or(0.0);
  auto best_params = snapshot(bm.doppel);
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(batches.begin(), batches.end(), rng);
    for (const auto& batch : batches) {
      std::size_t batch_cells = 0;
      for (auto i : batch) batch_cells += train[i].tokens.size() * n;
      opt.zero_grad();
      for (auto i : batch) {
        const double weight = static_cast<double>(train[i].tokens.size() * n) /
                              static_cast<double>(batch_cells);
        Tensor loss = binary_cross_entropy(bm.doppel.forward(train_taps[i]), labels[i]);
        scale(loss, weight).backward();
      }
      opt.step();
    }
    const auto r = record(epoch);
    if (!r.val_loss) {
      log.best_epoch = epoch;
      continue;
    }
    if (*r.val_loss < best_val) {
      best_val = *r.val_loss;
      best_params = snapshot(bm.doppel);
      log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      log.early_stopped = true;
      break;
    }
  }
  opt.zero_grad();
  if (!val.empty()) restore(bm.doppel, best_params);

  if (bm.language.checksum() != language_before) {
    throw std::logic_error("language parameters changed during Doppelgänger training");
  }
  return log;
}

}  // namespace bicameral
