#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adsep/dsp/stft.hpp"
#include "adsep/graph/graph.hpp"
#include "adsep/model/config.hpp"

namespace adsep::model::inline ADSEP_REAL_NS {

// S x T x F time-frequency masks with values in [0, 1].
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(std::size_t sources, std::size_t frames, std::size_t bins, double fill = 0.0);
  static MaskSet from_tensor(const graph::Tensor& t);

  std::size_t sources() const { return sources_; }
  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }

  double& operator()(std::size_t s, std::size_t t, std::size_t f) {
    return values_[(s * frames_ + t) * bins_ + f];
  }
  double operator()(std::size_t s, std::size_t t, std::size_t f) const {
    return values_[(s * frames_ + t) * bins_ + f];
  }

  // T x F slab for one source.
  std::span<const double> source(std::size_t s) const;
  std::span<double> source(std::size_t s);
  std::span<const double> data() const { return values_; }

  // Returns a copy with the sources reordered: out[k] = this[order[k]].
  MaskSet permuted(std::span<const std::size_t> order) const;

 private:
  std::size_t sources_ = 0, frames_ = 0, bins_ = 0;
  std::vector<double> values_;
};

// Freshly initialised parameters for `cfg`; deterministic in `seed`.
graph::ParameterSet init_parameters(const ModelConfig& cfg, std::uint64_t seed);

// Throws std::invalid_argument when a tensor is missing, unexpected or has the
// wrong shape for `cfg`.
void check_parameters(const ModelConfig& cfg, const graph::ParameterSet& params);

// Records the full network on `g` and returns the S x T x F mask node.
// For the single-channel topology `stream_channel` selects the channel that
// is separated; other channels only feed relational features.
graph::Var build_masks(graph::Graph& g, const dsp::ComplexSpectrogram& spec,
                       const ModelConfig& cfg, const graph::ParameterSet& params,
                       std::size_t stream_channel = 0);

// Inference wrappers. Every returned mask value lies in [0, 1].
MaskSet forward(const dsp::ComplexSpectrogram& spec, const ModelConfig& cfg,
                const graph::ParameterSet& params,
                graph::Precision precision = graph::Precision::f32);

// Monaural model on a one-channel spectrogram. Throws on multi-channel input.
MaskSet single_channel_forward(const dsp::ComplexSpectrogram& spec_one_channel,
                               const ModelConfig& cfg, const graph::ParameterSet& params,
                               graph::Precision precision = graph::Precision::f32);

// Monaural model applied to one channel of a multi-channel spectrogram, as
// used by the multi-stream baseline (other channels feed relational features).
MaskSet stream_forward(const dsp::ComplexSpectrogram& spec, std::size_t channel,
                       const ModelConfig& cfg, const graph::ParameterSet& params,
                       graph::Precision precision = graph::Precision::f32);

}  // namespace adsep::model::inline ADSEP_REAL_NS
