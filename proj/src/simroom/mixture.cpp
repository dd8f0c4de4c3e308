#include "adsep/simroom/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "adsep/common/error.hpp"
#include "adsep/dsp/fft.hpp"

namespace adsep::simroom {

train::TrainingExample render_mixture(std::span<const std::vector<double>> utterances, const RirSet& rirs,
                                      double overlap_ratio, std::span<const double> noise, double snr_db) {
  if (utterances.size() != 2) throw std::invalid_argument("render_mixture: exactly two utterances required");
  if (!(overlap_ratio >= 0.0 && overlap_ratio <= 1.0))
    throw std::invalid_argument("render_mixture: overlap_ratio must be in [0, 1]");
  if (utterances[0].empty() || utterances[1].empty())
    throw std::invalid_argument("render_mixture: empty utterance");
  const bool with_noise = !noise.empty();
  if (rirs.sources() < (with_noise ? 3u : 2u) || rirs.mics() == 0 || rirs.length() == 0)
    throw std::invalid_argument("render_mixture: RIR set lacks a source");
  if (with_noise && !std::isfinite(snr_db)) throw std::invalid_argument("render_mixture: snr_db must be finite");

  const std::size_t len0 = utterances[0].size(), len1 = utterances[1].size();
  const auto overlap = static_cast<std::size_t>(std::llround(overlap_ratio * static_cast<double>(std::min(len0, len1))));
  const std::size_t offset = len0 - overlap;
  const std::size_t span = std::max(len0, offset + len1);
  const std::size_t channels = rirs.mics();
  const std::size_t length = span + rirs.length() - 1;
  const int fs = rirs.sample_rate();

  train::TrainingExample ex;
  ex.overlap_ratio = overlap_ratio;
  ex.activity = {{0, len0}, {offset, offset + len1}};
  ex.mixture = dsp::MultiChannelWave(channels, length, fs);
  const std::size_t offsets[2] = {0, offset};
  for (std::size_t s = 0; s < 2; ++s) {
    dsp::MultiChannelWave image(channels, length, fs);
    for (std::size_t c = 0; c < channels; ++c) {
      const auto wet = dsp::fft_convolve(utterances[s], rirs.at(c, s));
      std::copy(wet.begin(), wet.end(), image.channel(c).begin() + static_cast<std::ptrdiff_t>(offsets[s]));
    }
    for (std::size_t i = 0; i < image.data().size(); ++i) ex.mixture.data()[i] += image.data()[i];
    ex.references.emplace_back(image.channel(0).begin(), image.channel(0).end());
    ex.source_images.push_back(std::move(image));
  }

  ex.snr_db = with_noise ? snr_db : std::numeric_limits<double>::infinity();
  if (with_noise) {
    std::vector<double> dry(span);
    for (std::size_t n = 0; n < span; ++n) dry[n] = noise[n % noise.size()];
    dsp::MultiChannelWave image(channels, length, fs);
    for (std::size_t c = 0; c < channels; ++c) {
      const auto wet = dsp::fft_convolve(dry, rirs.at(c, 2));
      std::copy(wet.begin(), wet.end(), image.channel(c).begin());
    }
    double speech = 0.0, noise_power = 0.0;
    for (double v : ex.mixture.data()) speech += v * v;
    for (double v : image.data()) noise_power += v * v;
    if (!(noise_power > 0.0)) throw DataError("render_mixture: noise image has zero power");
    const double gain = std::sqrt(speech / (noise_power * std::pow(10.0, snr_db / 10.0)));
    for (std::size_t i = 0; i < image.data().size(); ++i) ex.mixture.data()[i] += gain * image.data()[i];
  }
  return ex;
}

std::vector<double> white_noise(Rng& rng, std::size_t length) {
  std::normal_distribution<double> nd;
  std::vector<double> out(length);
  for (auto& v : out) v = nd(rng);
  return out;
}

std::vector<double> synthetic_utterance(Rng& rng, std::size_t length, int sample_rate) {
  constexpr double pi = std::numbers::pi;
  const double fs = sample_rate;
  std::normal_distribution<double> nd;

  // Gliding pitch with a vibrato-like drift.
  const double f0 = uniform(rng, 90.0, 240.0);
  const double drift_rate = uniform(rng, 0.3, 1.2), drift_phase = uniform(rng, 0.0, 2 * pi);
  const int harmonics = static_cast<int>(std::min(4000.0, 0.45 * fs) / (f0 * 1.1));
  std::vector<double> excitation(length);
  double phase = 0.0;
  for (std::size_t n = 0; n < length; ++n) {
    const double t = n / fs;
    phase += 2 * pi * f0 * (1.0 + 0.08 * std::sin(2 * pi * drift_rate * t + drift_phase)) / fs;
    double v = 0.0;
    for (int k = 1; k <= harmonics; ++k) v += std::sin(k * phase) / k;
    excitation[n] = 0.5 * v + 0.2 * nd(rng);
  }

  // Parallel two-pole formant resonators.
  const double formants[3] = {uniform(rng, 300, 900), uniform(rng, 900, 2500), uniform(rng, 2300, 3500)};
  const double gains[3] = {1.0, 0.7, 0.4};
  std::vector<double> voiced(length, 0.0);
  for (int f = 0; f < 3; ++f) {
    const double r = std::exp(-pi * uniform(rng, 60, 160) / fs);
    const double a1 = 2 * r * std::cos(2 * pi * formants[f] / fs), a2 = -r * r;
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
      const double y = (1 - r) * excitation[n] + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      voiced[n] += gains[f] * y;
    }
  }

  // Syllable envelope, gated into phrases separated by short pauses.
  const double rate = uniform(rng, 3.0, 6.0), env_phase = uniform(rng, 0.0, pi);
  std::vector<double> gate(length, 0.0);
  std::size_t pos = 0;
  bool first = true;
  while (pos < length) {
    const auto seg = static_cast<std::size_t>(uniform(rng, 0.3, 0.8) * fs);
    const bool on = first || uniform(rng, 0.0, 1.0) < 0.8;
    first = false;
    for (std::size_t n = pos; n < std::min(length, pos + seg); ++n) gate[n] = on ? 1.0 : 0.0;
    pos += seg;
  }
  double smooth = 0.0;
  const double alpha = 1.0 - std::exp(-1.0 / (0.01 * fs));
  double power = 0.0;
  for (std::size_t n = 0; n < length; ++n) {
    smooth += alpha * (gate[n] - smooth);
    const double s = std::sin(pi * rate * n / fs + env_phase);
    voiced[n] *= smooth * (0.15 + 0.85 * s * s);
    power += voiced[n] * voiced[n];
  }
  const double rms = std::sqrt(power / std::max<std::size_t>(length, 1));
  if (rms > 0)
    for (auto& v : voiced) v *= 0.1 / rms;
  return voiced;
}

}  // namespace adsep::simroom
