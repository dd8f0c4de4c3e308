#include "adsep/enhance/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adsep/common/error.hpp"
#include "adsep/common/random.hpp"

namespace adsep::enhance {
namespace {

const model::MaskSet& masks_for(std::span<const model::MaskSet> masks, std::size_t r) {
  return masks.size() == 1 ? masks[0] : masks[r];
}

void check_masks(const dsp::ComplexSpectrogram& spec, std::span<const model::MaskSet> masks) {
  if (masks.empty()) throw std::invalid_argument("no masks given");
  if (masks.size() != 1 && masks.size() != spec.channels())
    throw std::invalid_argument("expected one shared mask set or one per channel, got " +
                                std::to_string(masks.size()) + " for " + std::to_string(spec.channels()) +
                                " channels");
  for (const auto& m : masks) {
    if (m.sources() != 2) throw std::invalid_argument("mask sets must hold two sources");
    if (m.frames() != spec.frames() || m.bins() != spec.bins())
      throw std::invalid_argument("mask shape does not match the spectrogram");
  }
}

SpatialCovariances source_covariances(const dsp::ComplexSpectrogram& spec, const model::MaskSet& m,
                                      std::size_t k) {
  return spatial_covariances(spec, m.source(k), noise_mask(m, k));
}

// T x F slab of `channel` multiplied by mask k.
std::vector<dsp::Complex> masked_channel(const dsp::ComplexSpectrogram& spec, const model::MaskSet& m,
                                         std::size_t k, std::size_t channel) {
  const auto x = spec.channel(channel);
  const auto mk = m.source(k);
  std::vector<dsp::Complex> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = mk[i] * x[i];
  return out;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::string to_string(Mode m) { return m == Mode::masking ? "masking" : "mvdr"; }

std::string to_string(RefPolicy p) {
  switch (p) {
    case RefPolicy::max_snr: return "max-snr";
    case RefPolicy::random: return "random";
    case RefPolicy::oracle: return "oracle";
  }
  return "?";
}

std::string to_string(VadKind v) {
  switch (v) {
    case VadKind::none: return "none";
    case VadKind::oracle: return "oracle";
    case VadKind::energy: return "energy";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  if (s == "masking") return Mode::masking;
  if (s == "mvdr") return Mode::mvdr;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (masking, mvdr)");
}

RefPolicy parse_policy(std::string_view s) {
  if (s == "max-snr") return RefPolicy::max_snr;
  if (s == "random") return RefPolicy::random;
  if (s == "oracle") return RefPolicy::oracle;
  throw std::invalid_argument("unknown reference policy '" + std::string(s) + "' (max-snr, random, oracle)");
}

VadKind parse_vad(std::string_view s) {
  if (s == "none") return VadKind::none;
  if (s == "oracle") return VadKind::oracle;
  if (s == "energy") return VadKind::energy;
  throw std::invalid_argument("unknown vad '" + std::string(s) + "' (none, oracle, energy)");
}

double sdr_db(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size())
    throw std::invalid_argument("sdr: estimate has " + std::to_string(estimate.size()) + " samples, reference " +
                                std::to_string(reference.size()));
  double ee = 0.0, es = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    ee += estimate[i] * estimate[i];
    es += estimate[i] * reference[i];
    ss += reference[i] * reference[i];
  }
  if (!(ss > 0.0)) throw DataError("sdr: degenerate reference");
  const double a = ee > 0.0 ? es / ee : 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = reference[i] - a * estimate[i];
    err += d * d;
  }
  return 10.0 * std::log10(ss / std::max(err, 1e-8 * ss));
}

Flags activity_flags(std::span<const std::pair<std::size_t, std::size_t>> spans, std::size_t length) {
  Flags f(length, 0);
  for (const auto& [b, e] : spans)
    for (std::size_t n = b; n < std::min(e, length); ++n) f[n] = 1;
  return f;
}

Flags energy_vad(std::span<const double> wave, int sample_rate, double threshold_dbfs, double hangover_ms) {
  const auto frame = static_cast<std::size_t>(std::max(1L, std::lround(0.01 * sample_rate)));
  const auto hold = static_cast<std::size_t>(std::lround(hangover_ms / 10.0));
  Flags out(wave.size(), 0);
  std::size_t remaining = 0;
  for (std::size_t start = 0; start < wave.size(); start += frame) {
    const std::size_t end = std::min(wave.size(), start + frame);
    double p = 0.0;
    for (std::size_t n = start; n < end; ++n) p += wave[n] * wave[n];
    p /= static_cast<double>(end - start);
    const bool loud = p > 0.0 && 10.0 * std::log10(p) > threshold_dbfs;
    if (loud) remaining = hold + 1;
    if (remaining > 0) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(start), out.begin() + static_cast<std::ptrdiff_t>(end), 1);
      --remaining;
    }
  }
  return out;
}

std::vector<double> vad_gate(std::span<const double> wave, std::span<const std::uint8_t> active, int sample_rate) {
  if (wave.size() != active.size())
    throw std::invalid_argument("vad_gate: " + std::to_string(active.size()) + " flags for " +
                                std::to_string(wave.size()) + " samples");
  const std::size_t n = wave.size();
  const auto ramp = static_cast<std::size_t>(std::lround(0.01 * sample_rate));
  // Distance to the nearest active sample, capped at the ramp length.
  std::vector<std::size_t> dist(n, ramp);
  std::size_t d = ramp;
  for (std::size_t i = 0; i < n; ++i) {
    d = active[i] ? 0 : std::min(ramp, d + 1);
    dist[i] = d;
  }
  d = ramp;
  for (std::size_t i = n; i-- > 0;) {
    d = active[i] ? 0 : std::min(ramp, d + 1);
    dist[i] = std::min(dist[i], d);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double g = 0.0;
    if (dist[i] == 0)
      g = 1.0;
    else if (dist[i] < ramp)
      g = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(dist[i]) / static_cast<double>(ramp)));
    out[i] = g * wave[i];
  }
  return out;
}

AlignedStreams align_streams(const dsp::ComplexSpectrogram& spec, std::span<const model::MaskSet> per_channel) {
  if (per_channel.size() != spec.channels())
    throw std::invalid_argument("align_streams: one mask set per channel required");
  check_masks(spec, per_channel);
  auto normalised = [&](std::size_t c, std::size_t k) {
    const auto m = per_channel[c].source(k);
    const auto x = spec.channel(c);
    std::vector<double> mag(m.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      mag[i] = std::abs(m[i] * x[i]);
      norm += mag[i] * mag[i];
    }
    if (norm > 0.0)
      for (auto& v : mag) v /= std::sqrt(norm);
    return mag;
  };
  auto mse = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
  };
  AlignedStreams out;
  const std::vector<double> ref[2] = {normalised(0, 0), normalised(0, 1)};
  for (std::size_t c = 0; c < per_channel.size(); ++c) {
    std::array<std::size_t, 2> perm{0, 1};
    if (c > 0) {
      const std::vector<double> cur[2] = {normalised(c, 0), normalised(c, 1)};
      const double keep = mse(cur[0], ref[0]) + mse(cur[1], ref[1]);
      const double swap = mse(cur[1], ref[0]) + mse(cur[0], ref[1]);
      if (swap < keep) perm = {1, 0};
    }
    out.masks.push_back(per_channel[c].permuted(perm));
    out.perms.push_back(perm);
  }
  return out;
}

model::MaskSet ideal_ratio_masks(const train::TrainingExample& ex, const dsp::StftConfig& cfg, std::size_t channel) {
  if (channel >= ex.mixture.channels()) throw std::invalid_argument("ideal_ratio_masks: channel out of range");
  std::vector<std::vector<double>> images;
  if (!ex.source_images.empty()) {
    for (const auto& img : ex.source_images) images.emplace_back(img.channel(channel).begin(), img.channel(channel).end());
  } else if (channel == 0 && ex.references.size() == 2) {
    images = ex.references;
  } else {
    throw DataError("ideal_ratio_masks: example '" + ex.id + "' has no source images");
  }
  const auto mix = ex.mixture.channel(channel);
  std::vector<double> noise(mix.begin(), mix.end());
  for (const auto& img : images)
    for (std::size_t n = 0; n < noise.size(); ++n) noise[n] -= img[n];
  images.push_back(std::move(noise));
  const auto spec = dsp::stft(dsp::MultiChannelWave::from_channels(images, ex.mixture.sample_rate()), cfg);
  model::MaskSet m(2, spec.frames(), spec.bins());
  for (std::size_t t = 0; t < spec.frames(); ++t)
    for (std::size_t f = 0; f < spec.bins(); ++f) {
      const double p0 = std::norm(spec(0, t, f)), p1 = std::norm(spec(1, t, f)), pn = std::norm(spec(2, t, f));
      const double total = p0 + p1 + pn;
      m(0, t, f) = total > 0.0 ? p0 / total : 0.0;
      m(1, t, f) = total > 0.0 ? p1 / total : 0.0;
    }
  return m;
}

OracleData OracleData::from_example(const train::TrainingExample& ex) {
  return {ex.source_images, ex.activity};
}

std::vector<ReferenceChoice> select_reference(const dsp::ComplexSpectrogram& spec,
                                              std::span<const model::MaskSet> masks, RefPolicy policy,
                                              std::uint64_t seed, const OracleData* oracle, double loading) {
  check_masks(spec, masks);
  const std::size_t C = spec.channels();
  if (policy == RefPolicy::oracle &&
      (!oracle || oracle->images.size() != 2 || oracle->images[0].channels() != C))
    throw std::invalid_argument("oracle reference selection needs clean source images at every channel");

  std::vector<ReferenceChoice> out(2);
  for (std::size_t k = 0; k < 2; ++k) {
    auto& choice = out[k];
    switch (policy) {
      case RefPolicy::max_snr: {
        std::optional<SpatialCovariances> shared;
        if (masks.size() == 1) shared = source_covariances(spec, masks[0], k);
        for (std::size_t r = 0; r < C; ++r) {
          const SpatialCovariances cov = shared ? *shared : source_covariances(spec, masks[r], k);
          choice.scores.push_back(posterior_snr(mvdr_weights(cov, r, loading), cov, loading));
        }
        choice.channel = argmax(choice.scores);
        break;
      }
      case RefPolicy::random: {
        Rng rng(derive_seed(seed, k));
        choice.channel = std::uniform_int_distribution<std::size_t>(0, C - 1)(rng);
        break;
      }
      case RefPolicy::oracle: {
        const auto& img = oracle->images[k];
        for (std::size_t r = 0; r < C; ++r) {
          const auto est = dsp::istft_channel(masked_channel(spec, masks_for(masks, r), k, r), spec.frames(),
                                              spec.config(), img.length());
          choice.scores.push_back(sdr_db(est, img.channel(r)));
        }
        choice.channel = argmax(choice.scores);
        break;
      }
    }
  }
  return out;
}

nlohmann::json EnhanceResult::sidecar(const EnhanceOptions& opts) const {
  nlohmann::json srcs = nlohmann::json::array();
  for (const auto& r : references) srcs.push_back({{"reference", r.channel}, {"scores", r.scores}});
  return {{"mode", to_string(opts.mode)},
          {"policy", to_string(opts.policy)},
          {"vad", to_string(opts.vad)},
          {"loading", opts.loading},
          {"seed", opts.seed},
          {"sources", srcs}};
}

EnhanceResult enhance_utterance(const dsp::ComplexSpectrogram& spec, std::span<const model::MaskSet> masks,
                                const EnhanceOptions& opts, const OracleData* oracle) {
  check_masks(spec, masks);
  const auto& cfg = spec.config();
  const std::size_t length = opts.length ? opts.length : (spec.frames() - 1) * cfg.hop;
  if (opts.vad == VadKind::oracle && (!oracle || oracle->activity.size() != 2))
    throw std::invalid_argument("oracle VAD needs per-source activity spans");

  EnhanceResult res;
  if (opts.mode == Mode::masking && masks.size() == 1)
    res.references.assign(2, ReferenceChoice{});
  else
    res.references = select_reference(spec, masks, opts.policy, opts.seed, oracle, opts.loading);

  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t r = res.references[k].channel;
    const model::MaskSet& m = masks_for(masks, r);
    const auto masked = masked_channel(spec, m, k, r);
    std::vector<double> y;
    if (opts.mode == Mode::masking) {
      y = dsp::istft_channel(masked, spec.frames(), cfg, length);
    } else {
      const auto cov = source_covariances(spec, m, k);
      const auto out = beamform(spec, mvdr_weights(cov, r, opts.loading));
      y = dsp::istft_channel(out.channel(0), spec.frames(), cfg, length);
    }
    if (opts.vad == VadKind::oracle) {
      y = vad_gate(y, activity_flags(std::span(oracle->activity).subspan(k, 1), length), cfg.sample_rate);
    } else if (opts.vad == VadKind::energy) {
      const auto probe = dsp::istft_channel(masked, spec.frames(), cfg, length);
      y = vad_gate(y, energy_vad(probe, cfg.sample_rate), cfg.sample_rate);
    }
    res.sources.push_back(std::move(y));
  }
  return res;
}

}  // namespace adsep::enhance
