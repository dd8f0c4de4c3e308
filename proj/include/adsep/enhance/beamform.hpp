#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adsep/dsp/stft.hpp"
#include "adsep/model/network.hpp"

namespace adsep::enhance {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kDefaultLoading = 1e-6;

// Per-frequency speech and noise spatial covariance matrices (C x C) of one
// target source.
struct SpatialCovariances {
  std::vector<CMatrix> speech;
  std::vector<CMatrix> noise;

  std::size_t bins() const { return speech.size(); }
  std::size_t channels() const { return speech.empty() ? 0 : static_cast<std::size_t>(speech[0].rows()); }
};

// One masked T x F spectrum per source, taken from `channel` of `spec`;
// returned as an S-"channel" spectrogram so istft yields one wave per source.
dsp::ComplexSpectrogram apply_masks(const dsp::ComplexSpectrogram& spec, const model::MaskSet& masks,
                                    std::size_t channel = 0);

// Interference mask for `source` of a two-source set: the other source plus
// the unexplained residual, clamp(m_other + max(0, 1 - m_0 - m_1), 0, 1).
std::vector<double> noise_mask(const model::MaskSet& masks, std::size_t source);

// Mask-weighted outer-product averages over frames. A frequency whose mask
// sums to zero falls back to the unweighted average. Results are made exactly
// Hermitian by averaging with the conjugate transpose.
SpatialCovariances spatial_covariances(const dsp::ComplexSpectrogram& spec, std::span<const double> speech_mask,
                                       std::span<const double> noise_mask);

// Phi_n + loading * (trace(Phi_n) / C) * I.
CMatrix loaded(const CMatrix& noise, double loading = kDefaultLoading);

// Trace-normalised MVDR: w(f) = (Phi~_n^-1 Phi_s / trace(Phi~_n^-1 Phi_s)) e_ref.
// Frequencies with a vanishing trace (or no noise energy at all) get the unit
// passthrough weight e_ref. Returns F weight vectors of length C.
std::vector<CVector> mvdr_weights(const SpatialCovariances& cov, std::size_t ref,
                                  double loading = kDefaultLoading);

// sum_f w^H Phi_s w / sum_f w^H Phi~_n w.
double posterior_snr(std::span<const CVector> weights, const SpatialCovariances& cov,
                     double loading = kDefaultLoading);

// y(t, f) = w(f)^H x(t, f); returns a one-channel spectrogram.
dsp::ComplexSpectrogram beamform(const dsp::ComplexSpectrogram& spec, std::span<const CVector> weights);

}  // namespace adsep::enhance
