#include "faec/transceiver/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "faec/errors.hpp"
#include "faec/io.hpp"

namespace faec {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'F', 'A', 'E', 'C'};

json channel_to_json(const ChannelConfig& c) {
  return json{{"sample_rate", c.sample_rate},
              {"distance_km", c.distance_km},
              {"beta2_ps2_per_km", c.beta2_ps2_per_km},
              {"atten_db_per_km", c.atten_db_per_km},
              {"lpf_bandwidth", c.lpf_bandwidth},
              {"noise_sigma", c.noise_sigma},
              {"include_tx_lpf", c.include_tx_lpf},
              {"include_rx_lpf", c.include_rx_lpf}};
}

ChannelConfig channel_from_json(const json& j) {
  ChannelConfig c;
  c.sample_rate = j.at("sample_rate").get<double>();
  c.distance_km = j.at("distance_km").get<double>();
  c.beta2_ps2_per_km = j.at("beta2_ps2_per_km").get<double>();
  c.atten_db_per_km = j.at("atten_db_per_km").get<double>();
  c.lpf_bandwidth = j.at("lpf_bandwidth").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.include_tx_lpf = j.at("include_tx_lpf").get<bool>();
  c.include_rx_lpf = j.at("include_rx_lpf").get<bool>();
  return c;
}

json architecture_to_json(const Architecture& a) {
  return json{{"kind", to_string(a.kind)},
              {"messages", a.messages},
              {"samples_per_block", a.samples_per_block},
              {"encoder_hidden", a.encoder_hidden},
              {"decoder_hidden", a.decoder_hidden},
              {"hidden_activation", to_string(a.hidden_activation)},
              {"brnn_hidden", a.brnn_hidden},
              {"tx_merge", to_string(a.tx_merge)},
              {"rx_merge", to_string(a.rx_merge)},
              {"tx_output_activation", to_string(Activation::clipped_relu01)},
              {"rx_output_activation", to_string(Activation::identity)}};
}

Architecture architecture_from_json(const json& j) {
  Architecture a;
  a.kind = parse_model_kind(j.at("kind").get<std::string>());
  a.messages = j.at("messages").get<std::size_t>();
  a.samples_per_block = j.at("samples_per_block").get<std::size_t>();
  a.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
  a.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
  a.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
  a.brnn_hidden = j.at("brnn_hidden").get<std::size_t>();
  a.tx_merge = parse_merge(j.at("tx_merge").get<std::string>());
  a.rx_merge = parse_merge(j.at("rx_merge").get<std::string>());
  return a;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Transceiver& model,
                                               const ChannelConfig& training_channel) {
  json manifest = json::array();
  for (const auto* p : model.parameters()) {
    manifest.push_back(json{{"name", p->name}, {"shape", p->shape()}});
  }
  const json header{{"format", "faec-checkpoint"},
                    {"version", kCheckpointVersion},
                    {"architecture", architecture_to_json(model.architecture())},
                    {"training_channel", channel_to_json(training_channel)},
                    {"parameters", manifest}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, kCheckpointVersion, 2);
  put_le(out, text.size(), 4);
  out.insert(out.end(), text.begin(), text.end());
  for (const auto* p : model.parameters()) {
    for (double v : p->value.values()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: missing FAEC magic");
  }
  const auto version = static_cast<std::uint16_t>(get_le(bytes, 4, 2));
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t header_len = get_le(bytes, 6, 4);
  if (bytes.size() < 10 + header_len) throw FormatError("checkpoint: truncated header");

  json header;
  try {
    header = json::parse(bytes.begin() + 10, bytes.begin() + 10 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  }

  Checkpoint ck;
  try {
    if (header.at("version").get<int>() != kCheckpointVersion) {
      throw FormatError("checkpoint: header version disagrees with file version");
    }
    ck.model = Transceiver(architecture_from_json(header.at("architecture")));
    ck.training_channel = channel_from_json(header.at("training_channel"));
    const auto& manifest = header.at("parameters");
    auto params = ck.model.parameters();
    if (manifest.size() != params.size()) {
      throw FormatError("checkpoint: " + std::to_string(manifest.size()) +
                        " parameters in manifest, architecture declares " +
                        std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto name = manifest[i].at("name").get<std::string>();
      const auto shape = manifest[i].at("shape").get<Shape>();
      if (name != params[i]->name || shape != params[i]->shape()) {
        throw FormatError("checkpoint: parameter " + std::to_string(i) + " is " + name +
                          shape_string(shape) + ", architecture expects " + params[i]->name +
                          shape_string(params[i]->shape()));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header field: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid architecture: ") + e.what());
  }

  std::size_t pos = 10 + header_len;
  const std::size_t expected = pos + 8 * ck.model.parameter_count();
  if (bytes.size() != expected) {
    throw FormatError("checkpoint: payload is " + std::to_string(bytes.size() - pos) +
                      " bytes, expected " + std::to_string(expected - pos) +
                      (bytes.size() < expected ? " (truncated)" : " (trailing data)"));
  }
  for (auto* p : ck.model.parameters()) {
    for (double& v : p->value.values()) {
      v = std::bit_cast<double>(get_le(bytes, pos, 8));
      pos += 8;
    }
  }
  return ck;
}

void save_checkpoint(const Transceiver& model, const ChannelConfig& training_channel,
                     const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model, training_channel);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace faec
