#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faec/estimator/estimator.hpp"
#include "faec/trainer/trainer.hpp"
#include "faec/transceiver/transceiver.hpp"

namespace faec::cli {

enum class Profile { full, desk };

std::string_view to_string(Profile profile);
Profile parse_profile(std::string_view name);

// Raw `[section]` / `key = value` text. Keys are stored as "section.key".
// Unknown sections or keys, duplicates and malformed lines are ConfigErrors.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string* find(const std::string& key) const;
  bool has_section(std::string_view section) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Every key the parser accepts, as "section.key".
const std::vector<std::string>& known_keys();

struct SweepConfig {
  std::vector<double> distances_km;
  std::filesystem::path ffnn_checkpoint;
  std::filesystem::path brnn_checkpoint;
  bool retrain = false;  // train a fresh model per (kind, distance) instead
};

struct RunConfig {
  Profile profile = Profile::desk;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "faec_out";
  Architecture model;
  TrainConfig train;  // train.channel is the channel
  WindowConfig window;
  EvalConfig eval;
  SweepConfig sweep;

  const ChannelConfig& channel() const { return train.channel; }
  void validate() const;
};

// Command-line flags; each one, when set, wins over the config file.
struct Overrides {
  std::optional<Profile> profile;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> window;
  std::optional<double> distance_km;
  std::optional<std::uint64_t> min_errors;
  std::optional<std::uint64_t> max_blocks;
};

// Built-in settings of a profile for one model kind.
RunConfig profile_defaults(Profile profile, ModelKind kind);

// Profile defaults for `kind`, then the file, then the flags; validated.
RunConfig resolve(const ConfigFile& file, ModelKind kind, const Overrides& overrides = {});

// The file's model.kind. ConfigError naming the field when absent.
ModelKind required_model_kind(const ConfigFile& file);

// Applies the file's [channel] keys on top of `base`.
ChannelConfig apply_channel_keys(const ConfigFile& file, ChannelConfig base);
// Applies the file's [model] keys (kind included) on top of `base`.
Architecture apply_model_keys(const ConfigFile& file, Architecture base);

}  // namespace faec::cli
