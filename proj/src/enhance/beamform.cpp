#include "adsep/enhance/beamform.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace adsep::enhance {
namespace {

void check_mask_shape(const dsp::ComplexSpectrogram& spec, const model::MaskSet& masks) {
  if (masks.frames() != spec.frames() || masks.bins() != spec.bins())
    throw std::invalid_argument("mask shape " + std::to_string(masks.frames()) + " x " +
                                std::to_string(masks.bins()) + " does not match spectrogram " +
                                std::to_string(spec.frames()) + " x " + std::to_string(spec.bins()));
}

CMatrix covariance(const dsp::ComplexSpectrogram& spec, std::size_t f, std::span<const double> mask) {
  const auto C = static_cast<Eigen::Index>(spec.channels());
  CMatrix phi = CMatrix::Zero(C, C);
  CVector x(C);
  double weight = 0.0;
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    const double m = mask.empty() ? 1.0 : mask[t * spec.bins() + f];
    if (m == 0.0) continue;
    for (Eigen::Index c = 0; c < C; ++c) x(c) = spec(static_cast<std::size_t>(c), t, f);
    phi.noalias() += m * x * x.adjoint();
    weight += m;
  }
  if (!(weight > 0.0)) return mask.empty() ? phi : covariance(spec, f, {});
  phi /= weight;
  return 0.5 * (phi + phi.adjoint());
}

}  // namespace

dsp::ComplexSpectrogram apply_masks(const dsp::ComplexSpectrogram& spec, const model::MaskSet& masks,
                                    std::size_t channel) {
  if (channel >= spec.channels())
    throw std::invalid_argument("apply_masks: channel " + std::to_string(channel) + " out of range");
  check_mask_shape(spec, masks);
  dsp::ComplexSpectrogram out(masks.sources(), spec.frames(), spec.config());
  for (std::size_t s = 0; s < masks.sources(); ++s)
    for (std::size_t t = 0; t < spec.frames(); ++t)
      for (std::size_t f = 0; f < spec.bins(); ++f) out(s, t, f) = masks(s, t, f) * spec(channel, t, f);
  return out;
}

std::vector<double> noise_mask(const model::MaskSet& masks, std::size_t source) {
  if (masks.sources() != 2 || source > 1) throw std::invalid_argument("noise_mask: expected two sources");
  const auto a = masks.source(0), b = masks.source(1);
  const auto other = source == 0 ? b : a;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = std::clamp(other[i] + std::max(0.0, 1.0 - a[i] - b[i]), 0.0, 1.0);
  return out;
}

SpatialCovariances spatial_covariances(const dsp::ComplexSpectrogram& spec, std::span<const double> speech_mask,
                                       std::span<const double> noise_mask) {
  const std::size_t n = spec.frames() * spec.bins();
  if (speech_mask.size() != n || noise_mask.size() != n)
    throw std::invalid_argument("spatial_covariances: masks must be T x F");
  SpatialCovariances cov;
  cov.speech.reserve(spec.bins());
  cov.noise.reserve(spec.bins());
  for (std::size_t f = 0; f < spec.bins(); ++f) {
    cov.speech.push_back(covariance(spec, f, speech_mask));
    cov.noise.push_back(covariance(spec, f, noise_mask));
  }
  return cov;
}

CMatrix loaded(const CMatrix& noise, double loading) {
  const double avg = noise.trace().real() / static_cast<double>(noise.rows());
  return noise + CMatrix::Identity(noise.rows(), noise.cols()) * (loading * avg);
}

std::vector<CVector> mvdr_weights(const SpatialCovariances& cov, std::size_t ref, double loading) {
  const std::size_t C = cov.channels();
  if (ref >= C) throw std::invalid_argument("mvdr_weights: reference channel " + std::to_string(ref) + " out of range");
  std::vector<CVector> w;
  w.reserve(cov.bins());
  const CVector passthrough = CVector::Unit(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(ref));
  for (std::size_t f = 0; f < cov.bins(); ++f) {
    const CMatrix noise = loaded(cov.noise[f], loading);
    if (!(noise.trace().real() > 0.0)) {
      w.push_back(passthrough);
      continue;
    }
    const CMatrix ratio = noise.partialPivLu().solve(cov.speech[f]);
    const std::complex<double> tr = ratio.trace();
    if (!(std::abs(tr) > 1e-12) || !ratio.allFinite()) {
      w.push_back(passthrough);
      continue;
    }
    w.push_back(ratio.col(static_cast<Eigen::Index>(ref)) / tr);
  }
  return w;
}

double posterior_snr(std::span<const CVector> weights, const SpatialCovariances& cov, double loading) {
  if (weights.size() != cov.bins()) throw std::invalid_argument("posterior_snr: weight count differs from bins");
  double num = 0.0, den = 0.0;
  for (std::size_t f = 0; f < cov.bins(); ++f) {
    const auto& w = weights[f];
    num += (w.adjoint() * cov.speech[f] * w).value().real();
    den += (w.adjoint() * loaded(cov.noise[f], loading) * w).value().real();
  }
  if (num <= 0.0) return 0.0;
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

dsp::ComplexSpectrogram beamform(const dsp::ComplexSpectrogram& spec, std::span<const CVector> weights) {
  if (weights.size() != spec.bins()) throw std::invalid_argument("beamform: one weight vector per bin required");
  dsp::ComplexSpectrogram out(1, spec.frames(), spec.config());
  for (std::size_t f = 0; f < spec.bins(); ++f) {
    if (static_cast<std::size_t>(weights[f].size()) != spec.channels())
      throw std::invalid_argument("beamform: weight length differs from channel count");
    for (std::size_t t = 0; t < spec.frames(); ++t) {
      std::complex<double> y = 0.0;
      for (std::size_t c = 0; c < spec.channels(); ++c)
        y += std::conj(weights[f](static_cast<Eigen::Index>(c))) * spec(c, t, f);
      out(0, t, f) = y;
    }
  }
  return out;
}

}  // namespace adsep::enhance
