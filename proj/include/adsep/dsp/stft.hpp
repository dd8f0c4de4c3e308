#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "adsep/dsp/wave.hpp"

namespace adsep::dsp {

enum class WindowKind { sqrt_hann };

struct StftConfig {
  std::size_t fft_size = 512;
  std::size_t hop = 256;
  WindowKind window = WindowKind::sqrt_hann;
  int sample_rate = 16000;

  std::size_t num_bins() const { return fft_size / 2 + 1; }

  // Throws std::invalid_argument unless fft_size is even, hop is in
  // (0, fft_size] and the squared window overlap-adds to a constant.
  void validate() const;

  bool operator==(const StftConfig&) const = default;
};

// Periodic analysis/synthesis window of length cfg.fft_size.
std::vector<double> make_window(const StftConfig& cfg);

// Constant value of sum_j w^2[n + j*hop]; istft divides by it.
double cola_gain(const StftConfig& cfg);

// Frames for an input of `length` samples under reflective center padding.
std::size_t num_frames(std::size_t length, const StftConfig& cfg);

using Complex = std::complex<double>;

// C x T x F complex bins, row-major with F fastest.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t channels, std::size_t frames, const StftConfig& cfg);

  std::size_t channels() const { return channels_; }
  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  const StftConfig& config() const { return config_; }

  Complex& operator()(std::size_t c, std::size_t t, std::size_t f) {
    return bins_data_[(c * frames_ + t) * bins_ + f];
  }
  const Complex& operator()(std::size_t c, std::size_t t, std::size_t f) const {
    return bins_data_[(c * frames_ + t) * bins_ + f];
  }

  // T x F slab of one channel.
  std::span<Complex> channel(std::size_t c);
  std::span<const Complex> channel(std::size_t c) const;

  std::span<const Complex> data() const { return bins_data_; }
  std::span<Complex> data() { return bins_data_; }

  ComplexSpectrogram select(std::span<const std::size_t> indices) const;

 private:
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  StftConfig config_;
  std::vector<Complex> bins_data_;
};

// Reflective center padding by fft_size/2, so frame t is centred on sample
// t*hop. Requires length >= fft_size and finite samples.
ComplexSpectrogram stft(const MultiChannelWave& wave, const StftConfig& cfg);

// Weighted overlap-add with the synthesis window, normalised by cola_gain.
// The output is cropped back to `length` samples (default (T-1)*hop).
MultiChannelWave istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
                       std::size_t length = 0);

// Single-channel variant over a T x F slab.
std::vector<double> istft_channel(std::span<const Complex> bins, std::size_t frames,
                                  const StftConfig& cfg, std::size_t length);

// Adjoint of istft_channel with respect to the real and imaginary parts of the
// input bins: for every spectrum G,
//   <grad, istft_channel(G)> = sum_{t,f} Re(G(t,f) * conj(B(t,f)))
// where B is the returned T x F array.
std::vector<Complex> istft_channel_adjoint(std::span<const double> grad, std::size_t frames,
                                           const StftConfig& cfg);

}  // namespace adsep::dsp
