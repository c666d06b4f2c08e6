#pragma once

#include <string>

#include <json.hpp>

#include "hpfl/types.hpp"

namespace hpfl {

// On-disk model snapshot. Binary layout, all integers/floats little-endian:
//   "HPFL"                        4-byte magic
//   version                       uint16 (currently 1)
//   dim_count                     uint32, then dim_count uint32 layer dims
//   per layer: mask bits for W (row-major) then b, LSB-first within each
//              byte, padded to a byte boundary per layer
//   per layer: W (row-major) then b as float32
//   meta_len                      uint32, then meta_len bytes of UTF-8 JSON
// The JSON always carries the per-layer activations; callers add stage, seed,
// remaining rate and logs.
struct Checkpoint {
  Architecture arch;
  Mask mask;
  ParamSetF params;
  nlohmann::json meta;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

// Serializes to bytes / parses from bytes (the file I/O free core).
std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);

// Writes atomically: temp file in the same directory, then rename.
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hpfl
