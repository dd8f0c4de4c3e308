#pragma once

#include <cstddef>
#include <string>

#include "json.hpp"

namespace adsep::model {

// interleaved: (attention -> BLSTM) x num_blocks, fusion attention, mean pool.
// stacked: all attention layers, then all BLSTM layers, then mean pool.
// single_channel: monaural BLSTM stack used by the multi-stream baseline.
enum class Topology { interleaved, stacked, single_channel };

enum class InputFeature { magnitude, magnitude_relational };

struct ModelConfig {
  Topology topology = Topology::interleaved;
  InputFeature input_feature = InputFeature::magnitude;
  std::size_t num_blocks = 3;
  std::size_t feature_dim = 257;  // N; equals the number of STFT bins
  std::size_t embed_dim = 128;    // E, per attention head
  std::size_t num_heads = 8;      // D
  std::size_t hidden = 512;       // H, recurrent cells per direction
  std::size_t single_channel_layers = 4;
  std::size_t num_sources = 2;
  bool scale_attention = false;   // divide similarities by sqrt(E)

  bool relational() const { return input_feature == InputFeature::magnitude_relational; }
  std::size_t input_dim() const { return relational() ? 2 * feature_dim : feature_dim; }

  // Throws std::invalid_argument on zero sizes or num_sources != 2.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

std::string to_string(Topology t);
std::string to_string(InputFeature f);
Topology parse_topology(const std::string& s);
InputFeature parse_input_feature(const std::string& s);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace adsep::model
