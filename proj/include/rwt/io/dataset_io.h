#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rwt/phantom/phantom.h"

// Dataset container:
//   "RWTD" | u32 version | u32 subject count
//   per subject: u32 payload bytes | payload | u32 CRC-32(payload)
//   payload: u32 id | spec record | u32 F | u32 H | u32 W | f64[F*H*W]
//            | u32 L | f64[F*L]
// All integers and reals little-endian. Reads are all-or-nothing.
namespace rwt::io {

inline constexpr std::uint32_t kDatasetVersion = 1;

std::string EncodeDataset(const std::vector<phantom::CineSequence>& subjects,
                          std::uint32_t version = kDatasetVersion);
std::vector<phantom::CineSequence> DecodeDataset(std::string_view bytes);

void WriteDataset(const std::filesystem::path& path,
                  const std::vector<phantom::CineSequence>& subjects);
std::vector<phantom::CineSequence> ReadDataset(const std::filesystem::path& path);

// One line per subject: id, seed and a summary of the drawn spec.
std::string DatasetManifest(const std::vector<phantom::CineSequence>& subjects);

}  // namespace rwt::io
