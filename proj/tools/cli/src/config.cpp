#include "faec/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "faec/errors.hpp"

namespace faec::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError(key + ": expected " + want + ", got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* want) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end) bad_value(key, value, want);
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  return parse_number<std::uint64_t>(key, value, "a non-negative integer");
}

double parse_f64(const std::string& key, const std::string& value) {
  return parse_number<double>(key, value, "a number");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "true or false");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& value, F&& item) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(item(key, trim(tok)));
  if (out.empty()) bad_value(key, value, "a comma-separated list");
  return out;
}

template <typename E, typename F>
E parse_enum(const std::string& key, const std::string& value, F&& parse) {
  try {
    return parse(value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"run.profile", [](RunConfig&, const auto&, const auto&) {}},  // consumed before defaults
      {"run.seed", [](RunConfig& c, const auto& k, const auto& v) { c.seed = parse_u64(k, v); }},
      {"run.out", [](RunConfig& c, const auto&, const auto& v) { c.out_dir = v; }},

      {"model.kind", [](RunConfig&, const auto&, const auto&) {}},  // selects defaults
      {"model.messages",
       [](RunConfig& c, const auto& k, const auto& v) { c.model.messages = parse_u64(k, v); }},
      {"model.samples_per_block",
       [](RunConfig& c, const auto& k, const auto& v) { c.model.samples_per_block = parse_u64(k, v); }},
      {"model.encoder_hidden",
       [](RunConfig& c, const auto& k, const auto& v) {
         c.model.encoder_hidden = parse_list<std::size_t>(k, v, parse_u64);
       }},
      {"model.decoder_hidden",
       [](RunConfig& c, const auto& k, const auto& v) {
         c.model.decoder_hidden = parse_list<std::size_t>(k, v, parse_u64);
       }},
      {"model.hidden_activation",
       [](RunConfig& c, const auto& k, const auto& v) {
         c.model.hidden_activation =
             parse_enum<Activation>(k, v, [](const std::string& s) { return parse_activation(s); });
       }},
      {"model.brnn_hidden",
       [](RunConfig& c, const auto& k, const auto& v) { c.model.brnn_hidden = parse_u64(k, v); }},
      {"model.tx_merge",
       [](RunConfig& c, const auto& k, const auto& v) {
         c.model.tx_merge = parse_enum<Merge>(k, v, [](const std::string& s) { return parse_merge(s); });
       }},
      {"model.rx_merge",
       [](RunConfig& c, const auto& k, const auto& v) {
         c.model.rx_merge = parse_enum<Merge>(k, v, [](const std::string& s) { return parse_merge(s); });
       }},

      {"channel.sample_rate",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.channel.sample_rate = parse_f64(k, v); }},
      {"channel.distance_km",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.channel.distance_km = parse_f64(k, v); }},
      {"channel.beta2_ps2_per_km",
       [](RunConfig& c, const auto& k, const auto& v) {
         c.train.channel.beta2_ps2_per_km = parse_f64(k, v);
       }},
      {"channel.atten_db_per_km",
       [](RunConfig& c, const auto& k, const auto& v) {
         c.train.channel.atten_db_per_km = parse_f64(k, v);
       }},
      {"channel.lpf_bandwidth",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.channel.lpf_bandwidth = parse_f64(k, v); }},
      {"channel.noise_sigma",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.channel.noise_sigma = parse_f64(k, v); }},
      {"channel.include_tx_lpf",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.channel.include_tx_lpf = parse_bool(k, v); }},
      {"channel.include_rx_lpf",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.channel.include_rx_lpf = parse_bool(k, v); }},

      {"train.batch_size",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.batch_size = parse_u64(k, v); }},
      {"train.seq_len", [](RunConfig& c, const auto& k, const auto& v) { c.train.seq_len = parse_u64(k, v); }},
      {"train.edge_exclusion",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.edge_exclusion = parse_u64(k, v); }},
      {"train.guard_blocks",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.guard_blocks = parse_u64(k, v); }},
      {"train.train_window",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.train_window = parse_u64(k, v); }},
      {"train.iterations",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.iterations = parse_u64(k, v); }},
      {"train.eval_interval",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.eval_interval = parse_u64(k, v); }},
      {"train.heldout_sequences",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.heldout_sequences = parse_u64(k, v); }},
      {"train.learning_rate",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.adam.lr = parse_f64(k, v); }},
      {"train.beta1", [](RunConfig& c, const auto& k, const auto& v) { c.train.adam.beta1 = parse_f64(k, v); }},
      {"train.beta2", [](RunConfig& c, const auto& k, const auto& v) { c.train.adam.beta2 = parse_f64(k, v); }},
      {"train.epsilon",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.adam.epsilon = parse_f64(k, v); }},

      {"window.size", [](RunConfig& c, const auto& k, const auto& v) { c.window.window_size = parse_u64(k, v); }},
      {"window.stride", [](RunConfig& c, const auto& k, const auto& v) { c.window.stride = parse_u64(k, v); }},

      {"eval.sequence_blocks",
       [](RunConfig& c, const auto& k, const auto& v) { c.eval.sequence_blocks = parse_u64(k, v); }},
      {"eval.min_errors",
       [](RunConfig& c, const auto& k, const auto& v) { c.eval.min_errors = parse_u64(k, v); }},
      {"eval.max_blocks",
       [](RunConfig& c, const auto& k, const auto& v) { c.eval.max_blocks = parse_u64(k, v); }},

      {"sweep.distances",
       [](RunConfig& c, const auto& k, const auto& v) {
         c.sweep.distances_km = parse_list<double>(k, v, parse_f64);
       }},
      {"sweep.ffnn_checkpoint", [](RunConfig& c, const auto&, const auto& v) { c.sweep.ffnn_checkpoint = v; }},
      {"sweep.brnn_checkpoint", [](RunConfig& c, const auto&, const auto& v) { c.sweep.brnn_checkpoint = v; }},
      {"sweep.retrain",
       [](RunConfig& c, const auto& k, const auto& v) { c.sweep.retrain = parse_bool(k, v); }},
  };
  return table;
}

const Setter* find_setter(const std::string& key) {
  for (const auto& [name, fn] : setters()) {
    if (name == key) return &fn;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(Profile profile) { return profile == Profile::full ? "full" : "desk"; }

Profile parse_profile(std::string_view name) {
  if (name == "full") return Profile::full;
  if (name == "desk") return Profile::desk;
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected full or desk)");
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

ConfigFile ConfigFile::parse(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  ConfigFile file;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' is outside any [section]");
    }
    static const std::vector<std::string> sections = {"run",    "model", "channel", "train",
                                                      "window", "eval",  "sweep"};
    if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!find_setter(full)) throw ConfigError("config: unknown key '" + full + "'");
      file.values_[full] = trim(value.data());
    }
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string* ConfigFile::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

bool ConfigFile::has_section(std::string_view section) const {
  const std::string prefix = std::string(section) + ".";
  return std::any_of(values_.begin(), values_.end(),
                     [&](const auto& kv) { return kv.first.starts_with(prefix); });
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  window.validate();
  eval.validate();
  if (eval.sequence_blocks < window.window_size) {
    throw ConfigError("eval.sequence_blocks must be >= window.size");
  }
  for (double d : sweep.distances_km) {
    if (!(d >= 0.0)) throw ConfigError("sweep.distances must all be >= 0");
  }
}

RunConfig profile_defaults(Profile profile, ModelKind kind) {
  RunConfig c;
  c.profile = profile;
  c.model.kind = kind;
  c.model.samples_per_block = 12;
  c.model.encoder_hidden = {128, 128};
  c.model.decoder_hidden = {128, 128};
  c.model.brnn_hidden = 64;

  // Optical amplification restores the launch power before the receiver,
  // so span loss does not scale the signal against the receiver noise.
  c.train.channel.atten_db_per_km = 0.0;
  c.train.channel.distance_km = 50.0;

  if (profile == Profile::full) {
    c.model.messages = 64;
    c.train.iterations = 50'000;
    c.eval.max_blocks = 1'000'000;
  } else {
    c.model.messages = 16;
    c.train.iterations = 5'000;
    c.eval.max_blocks = 200'000;
  }

  if (kind == ModelKind::brnn) {
    c.train.batch_size = 16;
    c.train.seq_len = 20;
    c.train.train_window = 10;
  } else {
    c.train.batch_size = 64;
    c.train.seq_len = 10;
    c.train.train_window = 0;
  }
  c.window.window_size = 10;
  c.eval.sequence_blocks = 100;
  c.eval.min_errors = 100;
  return c;
}

ModelKind required_model_kind(const ConfigFile& file) {
  const std::string* kind = file.find("model.kind");
  if (!kind) throw ConfigError("model.kind: required field is missing");
  return parse_enum<ModelKind>("model.kind", *kind,
                               [](const std::string& s) { return parse_model_kind(s); });
}

RunConfig resolve(const ConfigFile& file, ModelKind kind, const Overrides& overrides) {
  Profile profile = Profile::desk;
  if (const std::string* p = file.find("run.profile")) {
    profile = parse_enum<Profile>("run.profile", *p, [](const std::string& s) { return parse_profile(s); });
  }
  if (overrides.profile) profile = *overrides.profile;

  RunConfig c = profile_defaults(profile, kind);
  for (const auto& [key, value] : file.values()) (*find_setter(key))(c, key, value);

  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.out_dir) c.out_dir = *overrides.out_dir;
  if (overrides.window) c.window.window_size = *overrides.window;
  if (overrides.distance_km) c.train.channel.distance_km = *overrides.distance_km;
  if (overrides.min_errors) c.eval.min_errors = *overrides.min_errors;
  if (overrides.max_blocks) c.eval.max_blocks = *overrides.max_blocks;

  // A block-local receiver sees no context, so every window size decodes
  // identically; evaluate it with single-block windows.
  if (kind == ModelKind::ffnn) c.window.window_size = 1;

  c.train.seed = c.seed;
  c.eval.seed = c.seed;
  c.eval.window_size = c.window.window_size;
  c.eval.edge_exclusion = c.train.edge_exclusion;
  c.eval.guard_blocks = c.train.guard_blocks;
  c.validate();
  return c;
}

ChannelConfig apply_channel_keys(const ConfigFile& file, ChannelConfig base) {
  RunConfig scratch;
  scratch.train.channel = base;
  for (const auto& [key, value] : file.values()) {
    if (key.starts_with("channel.")) (*find_setter(key))(scratch, key, value);
  }
  scratch.train.channel.validate();
  return scratch.train.channel;
}

Architecture apply_model_keys(const ConfigFile& file, Architecture base) {
  RunConfig scratch;
  scratch.model = base;
  if (file.has("model.kind")) scratch.model.kind = required_model_kind(file);
  for (const auto& [key, value] : file.values()) {
    if (key.starts_with("model.")) (*find_setter(key))(scratch, key, value);
  }
  return scratch.model;
}

}  // namespace faec::cli
