#include "adsep/model/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "adsep/common/error.hpp"
#include "adsep/graph/ops.hpp"
#include "adsep/model/features.hpp"
#include "adsep/model/layers.hpp"

namespace adsep::model::inline ADSEP_REAL_NS {

using graph::Shape;
using graph::Tensor;
using graph::Var;

MaskSet::MaskSet(std::size_t sources, std::size_t frames, std::size_t bins, double fill)
    : sources_(sources), frames_(frames), bins_(bins), values_(sources * frames * bins, fill) {}

MaskSet MaskSet::from_tensor(const Tensor& t) {
  if (t.rank() != 3) throw std::invalid_argument("MaskSet: expected S x T x F tensor");
  MaskSet m(t.dim(0), t.dim(1), t.dim(2));
  std::copy(t.data().begin(), t.data().end(), m.values_.begin());
  return m;
}

std::span<const double> MaskSet::source(std::size_t s) const {
  return std::span<const double>(values_).subspan(s * frames_ * bins_, frames_ * bins_);
}

std::span<double> MaskSet::source(std::size_t s) {
  return std::span<double>(values_).subspan(s * frames_ * bins_, frames_ * bins_);
}

MaskSet MaskSet::permuted(std::span<const std::size_t> order) const {
  if (order.size() != sources_) throw std::invalid_argument("MaskSet::permuted: bad order size");
  MaskSet out(sources_, frames_, bins_);
  for (std::size_t k = 0; k < sources_; ++k) {
    auto src = source(order[k]);
    std::copy(src.begin(), src.end(), out.source(k).begin());
  }
  return out;
}

graph::ParameterSet init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  graph::ParameterSet p;
  const std::size_t n = cfg.feature_dim;
  p["input_norm.gain"] = Tensor({n}, 1.0);
  p["input_norm.bias"] = Tensor({n}, 0.0);
  const std::size_t first_in = cfg.input_dim();
  if (cfg.topology == Topology::single_channel) {
    for (std::size_t l = 0; l < cfg.single_channel_layers; ++l)
      add_temporal_params(p, "lstm" + std::to_string(l), l == 0 ? first_in : n, cfg, rng);
  } else {
    for (std::size_t b = 0; b < cfg.num_blocks; ++b) {
      const std::string prefix = "block" + std::to_string(b);
      // Attention comes first in both topologies, so only block0.attn sees
      // the (possibly relational) input width.
      add_channel_attention_params(p, prefix + ".attn", b == 0 ? first_in : n, cfg, rng);
      add_temporal_params(p, prefix + ".lstm", n, cfg, rng);
    }
    if (cfg.topology == Topology::interleaved) add_channel_attention_params(p, "fusion.attn", n, cfg, rng);
  }
  add_mask_head_params(p, cfg, rng);
  return p;
}

void check_parameters(const ModelConfig& cfg, const graph::ParameterSet& params) {
  // Shapes only depend on the config; seed 0 is as good as any.
  const auto expected = init_parameters(cfg, 0);
  for (const auto& [name, t] : expected) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("missing parameter '" + name + "'");
    if (it->second.shape() != t.shape())
      throw std::invalid_argument("parameter '" + name + "' has shape " +
                                  graph::shape_string(it->second.shape()) + ", expected " +
                                  graph::shape_string(t.shape()));
  }
  for (const auto& [name, t] : params)
    if (!expected.count(name)) throw std::invalid_argument("unexpected parameter '" + name + "'");
}

Var build_masks(graph::Graph& g, const dsp::ComplexSpectrogram& spec, const ModelConfig& cfg,
                const graph::ParameterSet& params, std::size_t stream_channel) {
  if (spec.channels() == 0) throw std::invalid_argument("build_masks: no channels");
  const std::size_t n = cfg.feature_dim;
  Var x = input_features(g, spec, cfg, params);
  const std::size_t t = spec.frames();

  if (cfg.topology == Topology::single_channel) {
    if (stream_channel >= spec.channels())
      throw std::invalid_argument("build_masks: stream channel out of range");
    if (spec.channels() > 1) x = graph::slice(x, 0, stream_channel, stream_channel + 1);
    for (std::size_t l = 0; l < cfg.single_channel_layers; ++l)
      x = temporal_layer(x, "lstm" + std::to_string(l), cfg, params);
    return mask_heads(graph::reshape(x, {t, n}), cfg, params);
  }

  // The residual of the first layer carries the spectral part only.
  auto spectral = [&](Var v) {
    return v.shape()[2] == n ? v : graph::slice(v, 2, 0, n);
  };
  if (cfg.topology == Topology::interleaved) {
    for (std::size_t b = 0; b < cfg.num_blocks; ++b) {
      const std::string prefix = "block" + std::to_string(b);
      x = channel_attention(x, spectral(x), prefix + ".attn", cfg, params);
      x = temporal_layer(x, prefix + ".lstm", cfg, params);
    }
    x = channel_attention(x, x, "fusion.attn", cfg, params);
  } else {
    for (std::size_t b = 0; b < cfg.num_blocks; ++b)
      x = channel_attention(x, spectral(x), "block" + std::to_string(b) + ".attn", cfg, params);
    for (std::size_t b = 0; b < cfg.num_blocks; ++b)
      x = temporal_layer(x, "block" + std::to_string(b) + ".lstm", cfg, params);
  }
  return mask_heads(graph::mean(x, 0), cfg, params);
}

namespace {

MaskSet run(const dsp::ComplexSpectrogram& spec, const ModelConfig& cfg,
            const graph::ParameterSet& params, graph::Precision precision,
            std::size_t stream_channel) {
  graph::Graph g(precision);
  Var masks = build_masks(g, spec, cfg, params, stream_channel);
  const Tensor& v = masks.value();
  for (double m : v.data())
    if (!std::isfinite(m) || m < 0.0 || m > 1.0)
      throw NumericError("model produced a mask value outside [0, 1]");
  return MaskSet::from_tensor(v);
}

}  // namespace

MaskSet forward(const dsp::ComplexSpectrogram& spec, const ModelConfig& cfg,
                const graph::ParameterSet& params, graph::Precision precision) {
  return run(spec, cfg, params, precision, 0);
}

MaskSet single_channel_forward(const dsp::ComplexSpectrogram& spec, const ModelConfig& cfg,
                               const graph::ParameterSet& params, graph::Precision precision) {
  if (spec.channels() != 1)
    throw std::invalid_argument("single_channel_forward: expected exactly one channel, got " +
                                std::to_string(spec.channels()));
  if (cfg.topology != Topology::single_channel)
    throw std::invalid_argument("single_channel_forward: model topology is " +
                                to_string(cfg.topology));
  return run(spec, cfg, params, precision, 0);
}

MaskSet stream_forward(const dsp::ComplexSpectrogram& spec, std::size_t channel,
                       const ModelConfig& cfg, const graph::ParameterSet& params,
                       graph::Precision precision) {
  if (cfg.topology != Topology::single_channel)
    throw std::invalid_argument("stream_forward: model topology is " + to_string(cfg.topology));
  if (!cfg.relational()) {
    const std::size_t idx[] = {channel};
    return run(spec.select(idx), cfg, params, precision, 0);
  }
  return run(spec, cfg, params, precision, channel);
}

}  // namespace adsep::model::inline ADSEP_REAL_NS
