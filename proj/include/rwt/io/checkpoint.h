#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "rwt/model/resrnn.h"

// Checkpoint container:
//   "RWTC" | u32 version | u32 body bytes | body | u32 CRC-32(body)
//   body: u32 config bytes | config text (key=value lines)
//         | u32 tensor count | per tensor: u32 name bytes | name | u32 rank
//           | u32 dims[rank] | f64 values
namespace rwt::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::ResRNNConfig config;
  model::ResRNNParams params;
};

// key=value lines, one per ResRNNConfig field.
std::string ModelConfigText(const model::ResRNNConfig& cfg);
// Throws std::invalid_argument on unknown keys or bad values.
model::ResRNNConfig ParseModelConfigText(std::string_view text);
// Applies one key; returns false if the key is not a model field.
bool SetModelConfigKey(model::ResRNNConfig& cfg, std::string_view key, std::string_view value);

std::string EncodeCheckpoint(const Checkpoint& ckpt, std::uint32_t version = kCheckpointVersion);
Checkpoint DecodeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace rwt::io
