#pragma once

#include <cstddef>

#include "adsep/dsp/stft.hpp"
#include "adsep/graph/graph.hpp"
#include "adsep/model/config.hpp"

namespace adsep::model::inline ADSEP_REAL_NS {

inline constexpr double kRelationalEps = 1e-8;

// |X| (or |X|^2 when `power`) as a C x T x F tensor.
graph::Tensor magnitude_tensor(const dsp::ComplexSpectrogram& spec, bool power = false);

// Per-vector layer normalisation over the last axis without gain or bias.
graph::Tensor normalize_frames(const graph::Tensor& x, double eps = 1e-5);

// Similarity-weighted sum of the other channels' frames. For channel i at
// frame t: d_j = ||X_i(t) - X_j(t)||, weights = softmax_j(1 / (d_j + eps_d))
// over j != i, Y_i(t) = sum_j w_j X_j(t). Input and output are C x T x N.
// Throws std::invalid_argument when C < 2.
graph::Tensor relational_features(const graph::Tensor& normalized, double eps_d = kRelationalEps);

// Layer-normalised magnitudes with the shared learnable gain/bias
// (input_norm.*), optionally concatenated with relational features of the
// parameter-free normalised magnitudes. Result is C x T x input_dim().
// The single-channel topology uses power spectra.
graph::Var input_features(graph::Graph& g, const dsp::ComplexSpectrogram& spec,
                          const ModelConfig& cfg, const graph::ParameterSet& params);

}  // namespace adsep::model::inline ADSEP_REAL_NS
