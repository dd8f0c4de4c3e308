#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace adsep::dsp {

// C x L real samples, row-major (one contiguous row per channel).
class MultiChannelWave {
 public:
  MultiChannelWave() = default;
  MultiChannelWave(std::size_t channels, std::size_t length, int sample_rate = 16000);

  static MultiChannelWave from_channels(const std::vector<std::vector<double>>& channels,
                                        int sample_rate = 16000);

  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  int sample_rate() const { return sample_rate_; }
  bool empty() const { return samples_.empty(); }

  std::span<double> channel(std::size_t c);
  std::span<const double> channel(std::size_t c) const;

  double& operator()(std::size_t c, std::size_t n) { return samples_[c * length_ + n]; }
  double operator()(std::size_t c, std::size_t n) const { return samples_[c * length_ + n]; }

  std::span<const double> data() const { return samples_; }
  std::span<double> data() { return samples_; }

  // New wave holding the listed channels in the given order.
  MultiChannelWave select(std::span<const std::size_t> indices) const;

  // Throws std::invalid_argument if any sample is NaN or infinite.
  void check_finite() const;

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  int sample_rate_ = 16000;
  std::vector<double> samples_;
};

}  // namespace adsep::dsp
