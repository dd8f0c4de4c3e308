#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "adsep/dsp/wave.hpp"

namespace adsep::train {

// One simulated utterance. References are the reverberant channel-0 images of
// the two sources, zero-padded to the mixture span.
struct TrainingExample {
  std::string id;
  dsp::MultiChannelWave mixture;
  std::vector<std::vector<double>> references;
  double overlap_ratio = 0.0;
  double snr_db = 0.0;

  // Optional simulator extras used by evaluation: per-source images at every
  // mic (C x L each) and the sample span [begin, end) where each source is
  // active. Empty when unavailable.
  std::vector<dsp::MultiChannelWave> source_images;
  std::vector<std::pair<std::size_t, std::size_t>> activity;
};

}  // namespace adsep::train
