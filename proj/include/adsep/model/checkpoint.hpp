#pragma once

#include <filesystem>

#include "adsep/graph/tensor.hpp"
#include "adsep/model/config.hpp"
#include "json.hpp"

namespace adsep::model::inline ADSEP_REAL_NS {

// On-disk layout:
//   8 bytes   magic "ADSEP001"
//   8 bytes   header length in bytes, little-endian uint64
//   header    JSON: {"model": {...}, "tensors": {name: {"dtype": "f32",
//             "shape": [...], "offset": bytes}}, "train_state": {...}}
//   payload   raw little-endian IEEE float32 values; offsets are relative to
//             the start of the payload
// Optimiser tensors are stored alongside the model under "optim." names.
struct Checkpoint {
  ModelConfig model;
  graph::ParameterSet params;
  graph::ParameterSet optimizer_state;
  nlohmann::json train_state;  // null when absent
};

inline constexpr char kCheckpointMagic[] = "ADSEP001";

// Written to a temporary file in the same directory, then renamed.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws DataError on a bad magic, malformed header or truncated payload.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace adsep::model::inline ADSEP_REAL_NS
