#pragma once

#include <iosfwd>

#include "bicameral/config.hpp"

namespace bicameral::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kContractRefusal = 3,
  kNumericFailure = 4,
};

// Parses arguments, runs one subcommand and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

void cmd_pretrain(const RunConfig& c, std::ostream& out);
void cmd_freeze(const RunConfig& c, std::ostream& out);
void cmd_make_data(const RunConfig& c, std::ostream& out);
void cmd_train_doppel(const RunConfig& c, std::ostream& out);
// Writes the event stream (jsonl or plain, per c.generate.format) to `out`.
void cmd_generate(const RunConfig& c, std::ostream& out);
// Returns false when a valid instance violates the inequality.
bool cmd_lemma_demo(const RunConfig& c, std::ostream& out);
// Returns false when any check fails.
bool cmd_gradcheck(const RunConfig& c, std::ostream& out);

}  // namespace bicameral::cli
