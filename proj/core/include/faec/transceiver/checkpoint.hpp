#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "faec/channel/channel.hpp"
#include "faec/transceiver/transceiver.hpp"

namespace faec {

// Binary checkpoint layout (little-endian):
//   "FAEC" | u16 format version | u32 header length | header (JSON text)
//   | parameter values as binary64, parameters in Transceiver::parameters()
//     order, each row-major.
// The header records the architecture, the channel the model was trained on
// and a manifest of parameter names and shapes.
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  Transceiver model;
  ChannelConfig training_channel;
};

std::vector<std::uint8_t> serialize_checkpoint(const Transceiver& model,
                                               const ChannelConfig& training_channel);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

// Writes through a temporary file and renames, so a failed save leaves no
// partial file behind.
void save_checkpoint(const Transceiver& model, const ChannelConfig& training_channel,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace faec
