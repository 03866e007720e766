#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "bicameral/checkpoint.hpp"
#include "bicameral/errors.hpp"
#include "bicameral/generation.hpp"
#include "bicameral/gradcheck.hpp"
#include "bicameral/reward_theory.hpp"
#include "bicameral/training.hpp"

namespace bicameral::cli {

namespace {

namespace fs = std::filesystem;

const fs::path& require_input(const fs::path& p, const char* key) {
  if (p.empty()) throw ConfigError(std::string("paths.") + key + " is not set");
  if (!fs::exists(p)) throw ConfigError(std::string("paths.") + key + ": " + p.string() + " does not exist");
  return p;
}

const fs::path& require_output(const fs::path& p, const char* key) {
  if (p.empty()) throw ConfigError(std::string("paths.") + key + " is not set");
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

std::ofstream open_output(const fs::path& p, const char* key) {
  std::ofstream f(require_output(p, key), std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return f;
}

Alphabet load_alphabet(const RunConfig& c) {
  return Alphabet::load(require_input(c.paths.alphabet, "alphabet"));
}

LMConfig language_config(const RunConfig& c, const Alphabet& alphabet) {
  LMConfig lc = c.lm;
  if (c.vocab_from_alphabet) {
    lc.vocab_size = alphabet.size();
  } else if (lc.vocab_size != alphabet.size()) {
    throw ConfigError("lm.vocab_size " + std::to_string(lc.vocab_size) +
                      " does not match the alphabet size " + std::to_string(alphabet.size()));
  }
  try {
    lc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return lc;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

void cmd_pretrain(const RunConfig& c, std::ostream& out) {
  const Alphabet alphabet = load_alphabet(c);
  const std::string text = read_text_file(require_input(c.paths.corpus, "corpus"));
  LanguageModel lm(language_config(c, alphabet), stage_seed(c.seed, "lm-init"));
  const auto windows = chunk_corpus(alphabet.encode(text), c.pretrain.window);
  if (windows.empty()) throw ConfigError("corpus is too short for a single training window");

  const auto log = pretrain(lm, windows, c.pretrain);
  save_checkpoint(require_output(c.paths.lm_checkpoint, "lm_checkpoint"), lm, nullptr, alphabet,
                  to_json(c));
  if (!c.paths.pretrain_log.empty()) {
    auto f = open_output(c.paths.pretrain_log, "pretrain_log");
    f << nlohmann::json{{"epoch", 0}, {"loss", log.initial_loss}}.dump() << '\n';
    for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
      f << nlohmann::json{{"epoch", e + 1}, {"loss", log.epoch_loss[e]}}.dump() << '\n';
    }
  }
  out << "pretrain: " << windows.size() << " windows, " << lm.parameter_count()
      << " parameters, loss " << fixed(log.initial_loss) << " -> "
      << fixed(log.epoch_loss.empty() ? log.initial_loss : log.epoch_loss.back()) << '\n';
}

void cmd_freeze(const RunConfig& c, std::ostream& out) {
  auto ckpt = load_checkpoint(require_input(c.paths.lm_checkpoint, "lm_checkpoint"));
  if (!ckpt.language.frozen()) ckpt.language.freeze();
  save_checkpoint(require_output(c.paths.frozen_checkpoint, "frozen_checkpoint"), ckpt.language,
                  ckpt.doppel ? &*ckpt.doppel : nullptr, ckpt.alphabet, to_json(c));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(ckpt.language.frozen_checksum()));
  out << "freeze: language checksum " << buf << '\n';
}

void cmd_make_data(const RunConfig& c, std::ostream& out) {
  const Alphabet alphabet = load_alphabet(c);
  SyntheticTaskSpec spec;
  spec.objectives = c.task.objectives;
  spec.source = c.task.source;
  if (spec.source == CorpusSource::kText) {
    spec.corpus_text = read_text_file(require_input(c.paths.corpus, "corpus"));
  }
  spec.num_sequences = c.task.num_sequences;
  spec.min_len = c.task.min_len;
  spec.max_len = c.task.max_len;
  spec.val_fraction = c.task.val_fraction;
  spec.seed = stage_seed(c.seed, "data");
  const auto split = generate_synthetic_dataset(spec, alphabet);
  write_dataset(require_output(c.paths.train_data, "train_data"), split.train);
  write_dataset(require_output(c.paths.val_data, "val_data"), split.val);
  out << "make-data: " << split.train.size() << " train, " << split.val.size()
      << " validation sequences, " << spec.objectives.size() << " objective(s)\n";
}

void cmd_train_doppel(const RunConfig& c, std::ostream& out) {
  auto ckpt = load_checkpoint(require_input(c.paths.frozen_checkpoint, "frozen_checkpoint"));
  if (!ckpt.language.frozen()) {
    throw ContractError("checkpoint " + c.paths.frozen_checkpoint.string() +
                        " holds an unfrozen language component; run freeze first");
  }
  const auto train = read_dataset(require_input(c.paths.train_data, "train_data"));
  Dataset val;
  if (!c.paths.val_data.empty()) val = read_dataset(require_input(c.paths.val_data, "val_data"));

  const LMConfig lc = ckpt.language.config();
  BicameralModel bm(std::move(ckpt.language),
                    Doppelganger(c.doppel, lc, stage_seed(c.seed, "doppel-init")));
  const auto log = train_doppelganger(bm, train, val, c.doppel_train);
  save_checkpoint(require_output(c.paths.bicameral_checkpoint, "bicameral_checkpoint"),
                  bm.language, &bm.doppel, ckpt.alphabet, to_json(c));
  if (!c.paths.doppel_log.empty()) {
    auto f = open_output(c.paths.doppel_log, "doppel_log");
    for (const auto& r : log.epochs) f << to_json(r).dump() << '\n';
  }
  const auto& first = log.epochs.front();
  const auto& best = log.epochs[log.best_epoch];
  out << "train-doppel: " << bm.doppel.parameter_count() << " parameters, "
      << log.epochs.size() - 1 << " epochs" << (log.early_stopped ? " (early stop)" : "")
      << ", best epoch " << log.best_epoch << ", train BCE " << fixed(first.train_loss) << " -> "
      << fixed(best.train_loss);
  if (best.val_loss) {
    out << ", val BCE " << fixed(*best.val_loss) << ", val acc";
    for (double a : best.val_acc) out << ' ' << fixed(a);
  }
  out << '\n';
}

void cmd_generate(const RunConfig& c, std::ostream& out) {
  auto ckpt = load_checkpoint(require_input(c.paths.bicameral_checkpoint, "bicameral_checkpoint"));
  if (!ckpt.doppel) throw ConfigError("checkpoint has no Doppelgänger; run train-doppel first");
  BicameralModel bm(std::move(ckpt.language), std::move(*ckpt.doppel));
  const TokenIds prompt = ckpt.alphabet.encode(c.generate.prompt);
  const auto events =
      generate(bm, ckpt.alphabet, prompt, c.generate.max_new, c.sampler, /*score=*/true);
  if (c.generate.format == "plain") {
    out << render_plain(events);
  } else {
    for (const auto& e : events) out << to_json(e).dump() << '\n';
  }
}

bool cmd_lemma_demo(const RunConfig& c, std::ostream& out) {
  const auto reports = reward::lemma_sweep(c.lemma_instances, c.seed);
  std::optional<std::ofstream> file;
  if (!c.paths.report.empty()) file = open_output(c.paths.report, "report");
  std::ostream& sink = file ? *file : out;
  std::size_t holds = 0, dominance = 0, pointwise = 0, equal = 0, probes = 0;
  for (const auto& r : reports) {
    sink << to_json(r).dump() << '\n';
    holds += r.holds;
    pointwise += r.pointwise_holds;
    equal += r.equal;
    probes += r.probe_holds;
    dominance += std::all_of(r.objective_dominance.begin(), r.objective_dominance.end(),
                             [](bool b) { return b; });
  }
  if (file) {
    out << "lemma-demo: " << reports.size() << " instances, inequality holds in " << holds
        << ", per-objective dominance in " << dominance << ", pointwise in " << pointwise
        << ", random shared parameter in " << probes << ", equality in " << equal << '\n';
  }
  return holds == reports.size() && dominance == reports.size() && pointwise == reports.size();
}

bool cmd_gradcheck(const RunConfig& c, std::ostream& out) {
  auto results = gradcheck_all_ops(c.seed);
  for (auto& r : gradcheck_bicameral(c.seed)) results.push_back(std::move(r));
  bool ok = true;
  char line[160];
  std::snprintf(line, sizeof(line), "%-36s %8s %12s %12s  %s\n", "check", "entries", "max_rel",
                "max_abs", "result");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%-36s %8zu %12.3e %12.3e  %s\n", r.name.c_str(), r.checked,
                  r.max_rel_error, r.max_abs_error, r.passed ? "pass" : "FAIL");
    out << line;
    ok = ok && r.passed;
  }
  return ok;
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bicameral language model: frozen language tower plus a Doppelgänger scorer"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Run seed (overrides the config)");

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Next-token pretraining of the language tower");
  auto* freeze_cmd = app.add_subcommand("freeze", "Freeze a pretrained language checkpoint");
  auto* data_cmd = app.add_subcommand("make-data", "Write synthetic per-prefix datasets");
  auto* train_cmd = app.add_subcommand("train-doppel", "Train the Doppelgänger on a frozen model");
  auto* gen_cmd = app.add_subcommand("generate", "Generate tokens with per-token scores");
  auto* lemma_cmd = app.add_subcommand("lemma-demo", "Verify split-objective supremacy");
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  for (auto* sub : {pretrain_cmd, freeze_cmd, data_cmd, train_cmd, gen_cmd, lemma_cmd, grad_cmd}) {
    sub->fallthrough();
  }

  std::optional<std::string> prompt, format, report;
  std::optional<std::size_t> max_new, instances;
  gen_cmd->add_option("--prompt", prompt, "Prompt text");
  gen_cmd->add_option("--max-new", max_new, "Tokens to generate");
  gen_cmd->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"jsonl", "plain"}));
  lemma_cmd->add_option("--instances", instances, "Random instances to verify");
  lemma_cmd->add_option("--report", report, "JSONL report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    RunConfig c;
    const bool standalone = lemma_cmd->parsed() || grad_cmd->parsed();
    if (!config_path.empty()) {
      c = load_run_config(config_path);
    } else if (!standalone) {
      throw ConfigError("--config is required for this command");
    } else if (!seed) {
      throw ConfigError("--seed is required when no config is given");
    }
    if (seed) {
      c.seed = *seed;
      apply_seed(c);
    }
    if (prompt) c.generate.prompt = *prompt;
    if (max_new) c.generate.max_new = *max_new;
    if (format) c.generate.format = *format;
    if (instances) c.lemma_instances = *instances;
    if (report) c.paths.report = *report;

    if (pretrain_cmd->parsed()) cmd_pretrain(c, out);
    if (freeze_cmd->parsed()) cmd_freeze(c, out);
    if (data_cmd->parsed()) cmd_make_data(c, out);
    if (train_cmd->parsed()) cmd_train_doppel(c, out);
    if (gen_cmd->parsed()) cmd_generate(c, out);
    if (lemma_cmd->parsed() && !cmd_lemma_demo(c, out)) {
      err << "lemma-demo: a valid instance violated the inequality\n";
      return kNumericFailure;
    }
    if (grad_cmd->parsed() && !cmd_gradcheck(c, out)) {
      err << "gradcheck: failed\n";
      return kNumericFailure;
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CheckpointVersionError& e) {
    err << "refused: " << e.what() << '\n';
    return kContractRefusal;
  } catch (const ContractError& e) {
    err << "refused: " << e.what() << '\n';
    return kContractRefusal;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace bicameral::cli
