#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "faec/cli/config.hpp"
#include "faec/cli/gradcheck_suite.hpp"
#include "faec/cli/results.hpp"

namespace faec::cli {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2 };

struct TrainOutcome {
  RunConfig config;
  TrainReport report;
  std::filesystem::path checkpoint;  // <out>/<kind>.faec
  std::filesystem::path loss_csv;    // <out>/<kind>_train.csv
  std::filesystem::path summary;     // <out>/<kind>_summary.json
};

// Trains the configured model and writes the checkpoint, loss curve and
// summary. Progress goes to `log`.
TrainOutcome cmd_train(const ConfigFile& file, const Overrides& overrides, std::ostream& log);

// Monte-Carlo BER of a checkpoint. The channel is the checkpoint's training
// channel with the file's [channel] keys and --distance applied on top. The
// JSON result goes to `out`, and to <out>/evaluate.json when an output
// directory is configured.
BerResult cmd_evaluate(const ConfigFile& file, const Overrides& overrides,
                       const std::filesystem::path& checkpoint, std::ostream& out,
                       std::ostream& log);

// One row per (kind, distance). Each cell uses its own derived seed; a
// failing cell becomes a row with a failure status. Writes <out>/sweep.csv.
// With `retrain` (or sweep.retrain) each cell trains a fresh model at its
// distance and saves it as <out>/<kind>_<distance>km.faec.
SweepResult cmd_sweep(const ConfigFile& file, const Overrides& overrides, bool retrain,
                      std::ostream& log);

// Runs the gradient suites of `scope`; prints the report to `out`.
GradSuiteReport cmd_gradcheck(GradScope scope, std::ostream& out);

// Seed of the sweep cell (kind, distance) under a run seed.
std::uint64_t sweep_cell_seed(std::uint64_t seed, ModelKind kind, double distance_km);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace faec::cli
