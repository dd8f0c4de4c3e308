#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adsep/enhance/beamform.hpp"
#include "adsep/train/example.hpp"

namespace adsep::enhance {

enum class Mode { masking, mvdr };
enum class RefPolicy { max_snr, random, oracle };
enum class VadKind { none, oracle, energy };

std::string to_string(Mode m);
std::string to_string(RefPolicy p);
std::string to_string(VadKind v);
// Accept the CLI spellings ("masking", "max-snr", ...); throw std::invalid_argument otherwise.
Mode parse_mode(std::string_view s);
RefPolicy parse_policy(std::string_view s);
VadKind parse_vad(std::string_view s);

// Scale-allowing SDR: 10 log10(|s|^2 / |s - a e|^2) with the least-squares a.
double sdr_db(std::span<const double> estimate, std::span<const double> reference);

using Flags = std::vector<std::uint8_t>;

Flags activity_flags(std::span<const std::pair<std::size_t, std::size_t>> spans, std::size_t length);

// Frame-energy VAD: 10 ms frames active above threshold_dbfs (RMS re full
// scale 1.0), held for `hangover_ms` after the last active frame.
Flags energy_vad(std::span<const double> wave, int sample_rate, double threshold_dbfs = -40.0,
                 double hangover_ms = 50.0);

// Zeroes inactive samples; gain falls from 1 to 0 along a raised cosine over
// the first 10 ms outside every active run.
std::vector<double> vad_gate(std::span<const double> wave, std::span<const std::uint8_t> active,
                             int sample_rate = 16000);

// Aligns the source order of per-channel mask sets to channel 0 by comparing
// unit-Frobenius-norm magnitude spectra |m x_c|. perms[c] is the order
// applied to channel c (identity on ties).
struct AlignedStreams {
  std::vector<model::MaskSet> masks;
  std::vector<std::array<std::size_t, 2>> perms;
};
AlignedStreams align_streams(const dsp::ComplexSpectrogram& spec, std::span<const model::MaskSet> per_channel);

// Ideal ratio masks |S_k|^2 / (sum_j |S_j|^2 + |N|^2) at one channel, from the
// simulator's source images; N is the mixture minus both images.
model::MaskSet ideal_ratio_masks(const train::TrainingExample& ex, const dsp::StftConfig& cfg,
                                 std::size_t channel = 0);

// Clean signals the oracle policies and oracle VAD may use.
struct OracleData {
  std::vector<dsp::MultiChannelWave> images;  // per source, C x L
  std::vector<std::pair<std::size_t, std::size_t>> activity;

  static OracleData from_example(const train::TrainingExample& ex);
};

struct ReferenceChoice {
  std::size_t channel = 0;
  std::vector<double> scores;  // per candidate: posterior SNR (max-snr) or SDR in dB (oracle)
};

// Mask inputs are either one set shared by all channels (size 1) or one
// aligned set per channel (multi-stream, size C); in the latter case candidate
// reference r uses channel r's masks.
std::vector<ReferenceChoice> select_reference(const dsp::ComplexSpectrogram& spec,
                                              std::span<const model::MaskSet> masks, RefPolicy policy,
                                              std::uint64_t seed = 0, const OracleData* oracle = nullptr,
                                              double loading = kDefaultLoading);

struct EnhanceOptions {
  Mode mode = Mode::mvdr;
  RefPolicy policy = RefPolicy::max_snr;
  VadKind vad = VadKind::none;
  double loading = kDefaultLoading;
  std::uint64_t seed = 0;
  std::size_t length = 0;  // output samples; default (T - 1) * hop
};

struct EnhanceResult {
  std::vector<std::vector<double>> sources;
  std::vector<ReferenceChoice> references;

  nlohmann::json sidecar(const EnhanceOptions& opts) const;
};

// Masking mode with shared masks always uses channel 0; with per-channel
// masks it masks the selected reference channel. MVDR mode beamforms all
// channels with the selected reference's masks.
EnhanceResult enhance_utterance(const dsp::ComplexSpectrogram& spec, std::span<const model::MaskSet> masks,
                                const EnhanceOptions& opts, const OracleData* oracle = nullptr);

}  // namespace adsep::enhance
