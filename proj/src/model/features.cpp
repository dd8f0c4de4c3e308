#include "adsep/model/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsep/graph/ops.hpp"
#include "adsep/model/layers.hpp"

namespace adsep::model::inline ADSEP_REAL_NS {

using graph::Shape;
using graph::Tensor;
using graph::Real;
using graph::Var;

Tensor magnitude_tensor(const dsp::ComplexSpectrogram& spec, bool power) {
  Tensor out(Shape{spec.channels(), spec.frames(), spec.bins()});
  const auto bins = spec.data();
  for (std::size_t i = 0; i < bins.size(); ++i)
    out[i] = power ? std::norm(bins[i]) : std::abs(bins[i]);
  return out;
}

Tensor normalize_frames(const Tensor& x, double eps) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    Real mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += x[r * n + j];
    mu /= static_cast<Real>(n);
    Real var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x[r * n + j] - mu) * (x[r * n + j] - mu);
    var /= static_cast<Real>(n);
    const Real inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = (x[r * n + j] - mu) * inv;
  }
  return out;
}

Tensor relational_features(const Tensor& x, double eps_d) {
  if (x.rank() != 3) throw std::invalid_argument("relational_features: expected C x T x N input");
  const std::size_t channels = x.dim(0), frames = x.dim(1), n = x.dim(2);
  if (channels < 2)
    throw std::invalid_argument("relational features require >= 2 channels");
  Tensor out(x.shape());
  auto at = [&](std::size_t c, std::size_t t) { return x.data().data() + (c * frames + t) * n; };
  std::vector<Real> logits(channels);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < channels; ++i) {
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::size_t j = 0; j < channels; ++j) {
        if (j == i) continue;
        Real d2 = 0.0;
        const Real* xi = at(i, t);
        const Real* xj = at(j, t);
        for (std::size_t f = 0; f < n; ++f) d2 += (xi[f] - xj[f]) * (xi[f] - xj[f]);
        logits[j] = 1.0 / (std::sqrt(d2) + eps_d);
        mx = std::max(mx, logits[j]);
      }
      Real total = 0.0;
      for (std::size_t j = 0; j < channels; ++j) {
        if (j == i) continue;
        logits[j] = std::exp(logits[j] - mx);
        total += logits[j];
      }
      Real* yi = out.data().data() + (i * frames + t) * n;
      for (std::size_t j = 0; j < channels; ++j) {
        if (j == i) continue;
        const Real w = logits[j] / total;
        const Real* xj = at(j, t);
        for (std::size_t f = 0; f < n; ++f) yi[f] += w * xj[f];
      }
    }
  }
  return out;
}

Var input_features(graph::Graph& g, const dsp::ComplexSpectrogram& spec, const ModelConfig& cfg,
                   const graph::ParameterSet& params) {
  if (spec.bins() != cfg.feature_dim)
    throw std::invalid_argument("input_features: spectrogram has " + std::to_string(spec.bins()) +
                                " bins but the model expects " + std::to_string(cfg.feature_dim));
  const bool power = cfg.topology == Topology::single_channel;
  Tensor mag = magnitude_tensor(spec, power);
  Var normed = graph::layer_norm(g.constant(mag), model::bind(g, params, "input_norm.gain"),
                                 model::bind(g, params, "input_norm.bias"));
  if (!cfg.relational()) return normed;
  Var rel = g.constant(relational_features(normalize_frames(mag)));
  const Var parts[] = {normed, rel};
  return graph::concat(parts, 2);
}

}  // namespace adsep::model::inline ADSEP_REAL_NS
