#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adsep/dsp/stft.hpp"
#include "adsep/graph/graph.hpp"
#include "adsep/train/sisnr.hpp"

namespace adsep::train::inline ADSEP_REAL_NS {

// Applies S x T x F magnitude masks to one channel of the mixture spectrum
// (mixture phase kept) and inverts each product: S x length waveforms.
graph::Var mask_istft(graph::Var masks, const dsp::ComplexSpectrogram& mixture,
                      std::size_t channel, std::size_t length);

// SI-SNR in dB of a rank-1 estimate node against a fixed reference. At the
// -80 dB floor the gradient is zero.
graph::Var si_snr_node(graph::Var estimate, std::span<const double> reference);

struct PitNode {
  graph::Var loss;  // -(mean SI-SNR) of the winning assignment
  Permutation perm{0, 1};
};

// Picks the winning assignment from the forward values, then records the loss
// through that assignment only.
PitNode pit_loss_node(graph::Var estimates, std::span<const std::vector<double>> references);

}  // namespace adsep::train::inline ADSEP_REAL_NS
