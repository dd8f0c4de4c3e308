#include "adsep/model/config.hpp"

#include <stdexcept>

namespace adsep::model {

void ModelConfig::validate() const {
  if (feature_dim == 0 || embed_dim == 0 || num_heads == 0 || hidden == 0)
    throw std::invalid_argument("ModelConfig: dimensions must be positive");
  if (topology != Topology::single_channel && num_blocks == 0)
    throw std::invalid_argument("ModelConfig: num_blocks must be positive");
  if (topology == Topology::single_channel && single_channel_layers == 0)
    throw std::invalid_argument("ModelConfig: single_channel_layers must be positive");
  if (num_sources != 2) throw std::invalid_argument("ModelConfig: exactly two sources supported");
}

std::string to_string(Topology t) {
  switch (t) {
    case Topology::interleaved: return "interleaved";
    case Topology::stacked: return "stacked";
    case Topology::single_channel: return "single_channel";
  }
  return "?";
}

std::string to_string(InputFeature f) {
  return f == InputFeature::magnitude ? "magnitude" : "magnitude+relational";
}

Topology parse_topology(const std::string& s) {
  if (s == "interleaved") return Topology::interleaved;
  if (s == "stacked") return Topology::stacked;
  if (s == "single_channel") return Topology::single_channel;
  throw std::invalid_argument("unknown topology '" + s + "'");
}

InputFeature parse_input_feature(const std::string& s) {
  if (s == "magnitude") return InputFeature::magnitude;
  if (s == "magnitude+relational" || s == "relational") return InputFeature::magnitude_relational;
  throw std::invalid_argument("unknown input feature '" + s + "'");
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"topology", to_string(cfg.topology)},
          {"input_feature", to_string(cfg.input_feature)},
          {"num_blocks", cfg.num_blocks},
          {"feature_dim", cfg.feature_dim},
          {"embed_dim", cfg.embed_dim},
          {"num_heads", cfg.num_heads},
          {"hidden", cfg.hidden},
          {"single_channel_layers", cfg.single_channel_layers},
          {"num_sources", cfg.num_sources},
          {"scale_attention", cfg.scale_attention}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.topology = parse_topology(j.at("topology").get<std::string>());
  cfg.input_feature = parse_input_feature(j.at("input_feature").get<std::string>());
  cfg.num_blocks = j.at("num_blocks").get<std::size_t>();
  cfg.feature_dim = j.at("feature_dim").get<std::size_t>();
  cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
  cfg.num_heads = j.at("num_heads").get<std::size_t>();
  cfg.hidden = j.at("hidden").get<std::size_t>();
  cfg.single_channel_layers = j.at("single_channel_layers").get<std::size_t>();
  cfg.num_sources = j.at("num_sources").get<std::size_t>();
  cfg.scale_attention = j.at("scale_attention").get<bool>();
  cfg.validate();
  return cfg;
}

}  // namespace adsep::model
