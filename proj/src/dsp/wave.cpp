#include "adsep/dsp/wave.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace adsep::dsp {

MultiChannelWave::MultiChannelWave(std::size_t channels, std::size_t length, int sample_rate)
    : channels_(channels), length_(length), sample_rate_(sample_rate),
      samples_(channels * length, 0.0) {
  if (channels == 0) throw std::invalid_argument("MultiChannelWave: need at least one channel");
}

MultiChannelWave MultiChannelWave::from_channels(
    const std::vector<std::vector<double>>& channels, int sample_rate) {
  if (channels.empty()) throw std::invalid_argument("MultiChannelWave: no channels");
  MultiChannelWave wave(channels.size(), channels.front().size(), sample_rate);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != wave.length_)
      throw std::invalid_argument("MultiChannelWave: channels differ in length");
    std::copy(channels[c].begin(), channels[c].end(), wave.channel(c).begin());
  }
  return wave;
}

std::span<double> MultiChannelWave::channel(std::size_t c) {
  return std::span<double>(samples_).subspan(c * length_, length_);
}

std::span<const double> MultiChannelWave::channel(std::size_t c) const {
  return std::span<const double>(samples_).subspan(c * length_, length_);
}

MultiChannelWave MultiChannelWave::select(std::span<const std::size_t> indices) const {
  MultiChannelWave out(indices.size(), length_, sample_rate_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= channels_)
      throw std::out_of_range("MultiChannelWave::select: channel " + std::to_string(indices[i]) +
                              " of " + std::to_string(channels_));
    auto src = channel(indices[i]);
    std::copy(src.begin(), src.end(), out.channel(i).begin());
  }
  return out;
}

void MultiChannelWave::check_finite() const {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i]))
      throw std::invalid_argument("non-finite sample at channel " + std::to_string(i / length_) +
                                  ", index " + std::to_string(i % length_));
  }
}

}  // namespace adsep::dsp
