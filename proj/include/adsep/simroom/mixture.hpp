#pragma once

#include <span>
#include <vector>

#include "adsep/common/random.hpp"
#include "adsep/simroom/room.hpp"
#include "adsep/train/example.hpp"

namespace adsep::simroom {

// Renders a two-talker reverberant mixture. Source 0 starts at sample 0 and
// source 1 is offset so that the dry signals overlap for
// round(overlap_ratio * min(len0, len1)) samples. Each utterance is convolved
// with its RIRs (sources 0 and 1 of `rirs`). When `noise` is non-empty it is
// tiled to the dry span, convolved with source 2 of `rirs` and scaled so the
// speech-to-noise power ratio over all channels equals snr_db.
//
// The result carries the per-mic source images, channel-0 references and the
// dry activity spans. Mixture length is the dry span plus the RIR tail.
train::TrainingExample render_mixture(std::span<const std::vector<double>> utterances,
                                      const RirSet& rirs, double overlap_ratio,
                                      std::span<const double> noise = {}, double snr_db = 15.0);

// Speech-like test signal: a gliding harmonic source plus breath noise through
// three random formant resonators, gated by a syllable-rate envelope with
// pauses. Normalised to RMS 0.1.
std::vector<double> synthetic_utterance(Rng& rng, std::size_t length, int sample_rate = 16000);

std::vector<double> white_noise(Rng& rng, std::size_t length);

}  // namespace adsep::simroom
