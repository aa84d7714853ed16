#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "faec/cli/config.hpp"
#include "faec/estimator/estimator.hpp"
#include "faec/trainer/trainer.hpp"

namespace faec::cli {

// Loss curve CSV:
//   # faec-train-csv v1
//   iteration,loss,block_error_rate
inline constexpr std::string_view kTrainCsvSchema = "# faec-train-csv v1";
std::string train_csv(const TrainReport& report);
std::vector<TrainRecord> parse_train_csv(std::string_view text);

// Deterministic JSON summary of a training run (no wall-clock fields).
std::string train_summary_json(const RunConfig& config, const TrainReport& report,
                               std::string_view checkpoint_file);

std::string ber_json(const BerResult& result, const ChannelConfig& channel, std::size_t window,
                     std::uint64_t seed);

struct SweepRow {
  double distance_km = 0.0;
  ModelKind kind = ModelKind::ffnn;
  std::size_t window = 1;
  double ber = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 1.0;
  std::uint64_t bit_errors = 0;
  std::uint64_t bits_total = 0;
  std::uint64_t blocks = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // "ok" or "failed: <reason>"

  bool ok() const { return status == "ok"; }
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (kind, distance)

  const SweepRow* find(ModelKind kind, double distance_km) const;
};

// Sweep CSV:
//   # faec-sweep-csv v1; hd_fec_threshold=0.0045 (6.7% HD-FEC)
//   distance_km,kind,window,ber,ci95_lo,ci95_hi,bit_errors,bits_total,blocks,seed,status
// ffnn rows precede brnn rows; distances ascend within a kind. Failed cells
// keep their row with the numeric fields left as written at failure time.
inline constexpr std::string_view kSweepCsvSchema = "# faec-sweep-csv v1";
std::string sweep_csv(const SweepResult& result);
SweepResult parse_sweep_csv(std::string_view text);

void sort_rows(std::vector<SweepRow>& rows);

}  // namespace faec::cli
