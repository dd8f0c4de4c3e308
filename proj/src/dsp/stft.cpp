#include "adsep/dsp/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "adsep/dsp/fft.hpp"

namespace adsep::dsp {

void StftConfig::validate() const {
  if (fft_size < 4 || fft_size % 2 != 0)
    throw std::invalid_argument("StftConfig: fft_size must be even and >= 4, got " +
                                std::to_string(fft_size));
  if (hop == 0 || hop > fft_size)
    throw std::invalid_argument("StftConfig: hop must be in (0, fft_size], got " +
                                std::to_string(hop));
  if (sample_rate <= 0) throw std::invalid_argument("StftConfig: sample_rate must be positive");
  const auto w = make_window(*this);
  double first = -1.0;
  for (std::size_t n = 0; n < hop; ++n) {
    double s = 0.0;
    for (std::size_t m = n; m < fft_size; m += hop) s += w[m] * w[m];
    if (first < 0.0) first = s;
    if (std::abs(s - first) > 1e-10 * first)
      throw std::invalid_argument("StftConfig: window does not overlap-add to a constant at hop " +
                                  std::to_string(hop));
  }
}

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.fft_size);
  const double n_total = static_cast<double>(cfg.fft_size);
  switch (cfg.window) {
    case WindowKind::sqrt_hann:
      // sqrt(0.5 - 0.5 cos(2 pi n / N)) == sin(pi n / N)
      for (std::size_t n = 0; n < cfg.fft_size; ++n)
        w[n] = std::sin(std::numbers::pi * static_cast<double>(n) / n_total);
      break;
  }
  return w;
}

double cola_gain(const StftConfig& cfg) {
  const auto w = make_window(cfg);
  // Index 0 of a periodic window is zero, so sample an interior phase.
  double s = 0.0;
  for (std::size_t m = cfg.hop / 2; m < cfg.fft_size; m += cfg.hop) s += w[m] * w[m];
  return s;
}

std::size_t num_frames(std::size_t length, const StftConfig& cfg) {
  return 1 + length / cfg.hop;
}

ComplexSpectrogram::ComplexSpectrogram(std::size_t channels, std::size_t frames,
                                       const StftConfig& cfg)
    : channels_(channels), frames_(frames), bins_(cfg.num_bins()), config_(cfg),
      bins_data_(channels * frames * cfg.num_bins()) {}

std::span<Complex> ComplexSpectrogram::channel(std::size_t c) {
  return std::span<Complex>(bins_data_).subspan(c * frames_ * bins_, frames_ * bins_);
}

std::span<const Complex> ComplexSpectrogram::channel(std::size_t c) const {
  return std::span<const Complex>(bins_data_).subspan(c * frames_ * bins_, frames_ * bins_);
}

ComplexSpectrogram ComplexSpectrogram::select(std::span<const std::size_t> indices) const {
  ComplexSpectrogram out(indices.size(), frames_, config_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= channels_) throw std::out_of_range("ComplexSpectrogram::select: bad channel");
    auto src = channel(indices[i]);
    std::copy(src.begin(), src.end(), out.channel(i).begin());
  }
  return out;
}

ComplexSpectrogram stft(const MultiChannelWave& wave, const StftConfig& cfg) {
  cfg.validate();
  const std::size_t n_fft = cfg.fft_size;
  const std::size_t len = wave.length();
  if (len < n_fft)
    throw std::invalid_argument("stft: input too short (" + std::to_string(len) +
                                " samples, need at least " + std::to_string(n_fft) + ")");
  wave.check_finite();

  const std::size_t half = n_fft / 2;
  const std::size_t frames = num_frames(len, cfg);
  const auto window = make_window(cfg);
  ComplexSpectrogram spec(wave.channels(), frames, cfg);
  RealFft fft(n_fft);
  std::vector<double> frame(n_fft);

  for (std::size_t c = 0; c < wave.channels(); ++c) {
    auto x = wave.channel(c);
    auto out = spec.channel(c);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t n = 0; n < n_fft; ++n) {
        // Position in the unpadded signal, reflected at both ends.
        std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(t * cfg.hop + n) -
                             static_cast<std::ptrdiff_t>(half);
        if (idx < 0) idx = -idx;
        const auto last = static_cast<std::ptrdiff_t>(len) - 1;
        if (idx > last) idx = 2 * last - idx;
        frame[n] = window[n] * x[static_cast<std::size_t>(idx)];
      }
      fft.forward(frame, out.subspan(t * spec.bins(), spec.bins()));
    }
  }
  return spec;
}

std::vector<double> istft_channel(std::span<const Complex> bins, std::size_t frames,
                                  const StftConfig& cfg, std::size_t length) {
  const std::size_t n_fft = cfg.fft_size;
  const std::size_t n_bins = cfg.num_bins();
  if (bins.size() != frames * n_bins)
    throw std::invalid_argument("istft: spectrum size does not match frames x bins");
  const std::size_t half = n_fft / 2;
  const auto window = make_window(cfg);
  const double norm = 1.0 / cola_gain(cfg);

  std::vector<double> out(length, 0.0);
  RealFft fft(n_fft);
  std::vector<double> frame(n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    fft.inverse(bins.subspan(t * n_bins, n_bins), frame);
    for (std::size_t n = 0; n < n_fft; ++n) {
      const std::size_t m = t * cfg.hop + n;
      if (m < half) continue;
      const std::size_t i = m - half;
      if (i >= length) break;
      out[i] += window[n] * frame[n] * norm;
    }
  }
  return out;
}

MultiChannelWave istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
                       std::size_t length) {
  cfg.validate();
  if (!(spec.config() == cfg))
    throw std::invalid_argument("istft: spectrogram was produced with a different StftConfig");
  if (length == 0) length = (spec.frames() - 1) * cfg.hop;
  MultiChannelWave wave(spec.channels(), length, cfg.sample_rate);
  for (std::size_t c = 0; c < spec.channels(); ++c) {
    auto y = istft_channel(spec.channel(c), spec.frames(), cfg, length);
    std::copy(y.begin(), y.end(), wave.channel(c).begin());
  }
  return wave;
}

std::vector<Complex> istft_channel_adjoint(std::span<const double> grad, std::size_t frames,
                                           const StftConfig& cfg) {
  const std::size_t n_fft = cfg.fft_size;
  const std::size_t n_bins = cfg.num_bins();
  const std::size_t half = n_fft / 2;
  const auto window = make_window(cfg);
  const double norm = 1.0 / cola_gain(cfg);
  const double inv_n = 1.0 / static_cast<double>(n_fft);

  std::vector<Complex> out(frames * n_bins);
  RealFft fft(n_fft);
  std::vector<double> frame(n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n = 0; n < n_fft; ++n) {
      const std::size_t m = t * cfg.hop + n;
      double g = 0.0;
      if (m >= half && m - half < grad.size()) g = grad[m - half];
      frame[n] = g * window[n] * norm;
    }
    auto dst = std::span<Complex>(out).subspan(t * n_bins, n_bins);
    fft.forward(frame, dst);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const bool edge = (k == 0) || (k == n_bins - 1);
      dst[k] *= (edge ? 1.0 : 2.0) * inv_n;
    }
  }
  return out;
}

}  // namespace adsep::dsp
