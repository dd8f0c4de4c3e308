#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "adsep/dsp/stft.hpp"
#include "adsep/model/config.hpp"

namespace testutil {

// N = 9 bins needs a 16-point transform.
inline adsep::dsp::StftConfig tiny_stft() {
  adsep::dsp::StftConfig cfg;
  cfg.fft_size = 16;
  cfg.hop = 8;
  return cfg;
}

inline adsep::model::ModelConfig tiny_model(
    adsep::model::Topology topology = adsep::model::Topology::interleaved) {
  adsep::model::ModelConfig cfg;
  cfg.topology = topology;
  cfg.feature_dim = 9;
  cfg.embed_dim = 4;
  cfg.num_heads = 2;
  cfg.hidden = 8;
  cfg.num_blocks = 2;
  cfg.single_channel_layers = 2;
  return cfg;
}

inline adsep::dsp::ComplexSpectrogram random_spec(std::size_t channels, std::size_t frames,
                                                  const adsep::dsp::StftConfig& cfg,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  adsep::dsp::ComplexSpectrogram spec(channels, frames, cfg);
  for (auto& v : spec.data()) v = {nd(rng), nd(rng)};
  return spec;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> ud(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = ud(rng);
  return v;
}

}  // namespace testutil
