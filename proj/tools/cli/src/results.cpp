#include "faec/cli/results.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "faec/errors.hpp"
#include "faec/io.hpp"

namespace faec::cli {

namespace {

constexpr std::string_view kTrainHeader = "iteration,loss,block_error_rate";
constexpr std::string_view kSweepHeader =
    "distance_km,kind,window,ber,ci95_lo,ci95_hi,bit_errors,bits_total,blocks,seed,status";

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

template <typename T>
T field(const std::string& s, std::string_view what) {
  T out{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("csv: bad " + std::string(what) + " '" + s + "'");
  }
  return out;
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

nlohmann::json channel_json(const ChannelConfig& c) {
  return {{"sample_rate", c.sample_rate},
          {"distance_km", c.distance_km},
          {"beta2_ps2_per_km", c.beta2_ps2_per_km},
          {"atten_db_per_km", c.atten_db_per_km},
          {"lpf_bandwidth", c.lpf_bandwidth},
          {"noise_sigma", c.noise_sigma},
          {"include_tx_lpf", c.include_tx_lpf},
          {"include_rx_lpf", c.include_rx_lpf}};
}

void expect_schema(const std::vector<std::string>& lines, std::string_view schema,
                   std::string_view header) {
  if (lines.size() < 2) throw FormatError("csv: missing schema or header line");
  if (!lines[0].starts_with(schema)) {
    throw FormatError("csv: unsupported schema line '" + lines[0] + "'");
  }
  if (lines[1] != header) throw FormatError("csv: unexpected header '" + lines[1] + "'");
}

}  // namespace

std::string train_csv(const TrainReport& report) {
  std::string out;
  out.append(kTrainCsvSchema).append("\n").append(kTrainHeader).append("\n");
  for (const TrainRecord& r : report.records) {
    out += std::to_string(r.iteration) + "," + format_double(r.loss) + "," +
           format_double(r.block_error_rate) + "\n";
  }
  return out;
}

std::vector<TrainRecord> parse_train_csv(std::string_view text) {
  const auto lines = lines_of(text);
  expect_schema(lines, kTrainCsvSchema, kTrainHeader);
  std::vector<TrainRecord> records;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() != 3) throw FormatError("csv: line " + std::to_string(i + 1) + " needs 3 fields");
    records.push_back({field<std::uint64_t>(f[0], "iteration"), field<double>(f[1], "loss"),
                       field<double>(f[2], "block_error_rate")});
  }
  return records;
}

std::string train_summary_json(const RunConfig& config, const TrainReport& report,
                               std::string_view checkpoint_file) {
  const Architecture& a = config.model;
  nlohmann::json j;
  j["profile"] = to_string(config.profile);
  j["seed"] = config.seed;
  j["model"] = {{"kind", to_string(a.kind)},
                {"messages", a.messages},
                {"samples_per_block", a.samples_per_block},
                {"encoder_hidden", a.encoder_hidden},
                {"decoder_hidden", a.decoder_hidden},
                {"hidden_activation", to_string(a.hidden_activation)},
                {"brnn_hidden", a.brnn_hidden},
                {"tx_merge", to_string(a.tx_merge)},
                {"rx_merge", to_string(a.rx_merge)}};
  j["channel"] = channel_json(config.channel());
  const TrainConfig& t = config.train;
  j["train"] = {{"batch_size", t.batch_size},         {"seq_len", t.seq_len},
                {"edge_exclusion", t.edge_exclusion}, {"guard_blocks", t.guard_blocks},
                {"train_window", t.train_window},     {"iterations", t.iterations},
                {"eval_interval", t.eval_interval},   {"learning_rate", t.adam.lr}};
  j["initial_loss"] = report.initial_loss;
  j["final_loss"] = report.final_loss;
  j["final_block_error_rate"] =
      report.records.empty() ? 0.0 : report.records.back().block_error_rate;
  j["records"] = report.records.size();
  j["checkpoint"] = std::string(checkpoint_file);
  return j.dump(2) + "\n";
}

std::string ber_json(const BerResult& r, const ChannelConfig& channel, std::size_t window,
                     std::uint64_t seed) {
  nlohmann::json j;
  j["ber"] = r.ber;
  j["ci95"] = {r.ci95.lo, r.ci95.hi};
  j["bit_errors"] = r.bit_errors;
  j["bits_total"] = r.bits_total;
  j["block_errors"] = r.block_errors;
  j["blocks_total"] = r.blocks_total;
  j["window"] = window;
  j["seed"] = seed;
  j["channel"] = channel_json(channel);
  j["hd_fec_threshold"] = kHdFecThreshold;
  j["hd_fec_label"] = kHdFecLabel;
  j["below_hd_fec"] = r.ber < kHdFecThreshold;
  return j.dump(2) + "\n";
}

const SweepRow* SweepResult::find(ModelKind kind, double distance_km) const {
  for (const SweepRow& r : rows) {
    if (r.kind == kind && r.distance_km == distance_km) return &r;
  }
  return nullptr;
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tuple(static_cast<int>(a.kind), a.distance_km) <
           std::tuple(static_cast<int>(b.kind), b.distance_km);
  });
}

std::string sweep_csv(const SweepResult& result) {
  std::string out;
  out.append(kSweepCsvSchema)
      .append("; hd_fec_threshold=")
      .append(format_double(kHdFecThreshold))
      .append(" (")
      .append(kHdFecLabel)
      .append(")\n")
      .append(kSweepHeader)
      .append("\n");
  for (const SweepRow& r : result.rows) {
    out += format_double(r.distance_km) + "," + std::string(to_string(r.kind)) + "," +
           std::to_string(r.window) + "," + format_double(r.ber) + "," + format_double(r.ci95_lo) +
           "," + format_double(r.ci95_hi) + "," + std::to_string(r.bit_errors) + "," +
           std::to_string(r.bits_total) + "," + std::to_string(r.blocks) + "," +
           std::to_string(r.seed) + "," + sanitize(r.status) + "\n";
  }
  return out;
}

SweepResult parse_sweep_csv(std::string_view text) {
  const auto lines = lines_of(text);
  expect_schema(lines, kSweepCsvSchema, kSweepHeader);
  SweepResult result;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() != 11) throw FormatError("csv: line " + std::to_string(i + 1) + " needs 11 fields");
    SweepRow r;
    r.distance_km = field<double>(f[0], "distance_km");
    try {
      r.kind = parse_model_kind(f[1]);
    } catch (const ConfigError&) {
      throw FormatError("csv: bad kind '" + f[1] + "'");
    }
    r.window = field<std::size_t>(f[2], "window");
    r.ber = field<double>(f[3], "ber");
    r.ci95_lo = field<double>(f[4], "ci95_lo");
    r.ci95_hi = field<double>(f[5], "ci95_hi");
    r.bit_errors = field<std::uint64_t>(f[6], "bit_errors");
    r.bits_total = field<std::uint64_t>(f[7], "bits_total");
    r.blocks = field<std::uint64_t>(f[8], "blocks");
    r.seed = field<std::uint64_t>(f[9], "seed");
    r.status = f[10];
    result.rows.push_back(std::move(r));
  }
  return result;
}

}  // namespace faec::cli
