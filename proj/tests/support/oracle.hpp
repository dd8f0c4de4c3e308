#pragma once

// Loss evaluations in long double for finite-difference checks of the 64-bit
// gradients. The implementations are the library's own code built with
// ADSEP_EXTENDED_REAL; only plain data crosses the boundary.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "adsep/dsp/stft.hpp"
#include "adsep/model/config.hpp"

namespace oracle {

struct FlatTensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};
using FlatParameters = std::map<std::string, FlatTensor>;

template <class ParameterSet>
FlatParameters flatten(const ParameterSet& params) {
  FlatParameters out;
  for (const auto& [name, t] : params)
    out[name] = FlatTensor{t.shape(), std::vector<double>(t.data().begin(), t.data().end())};
  return out;
}

// sum(weights * masks) for the network's S x T x F masks.
long double weighted_mask_loss(const adsep::model::ModelConfig& cfg,
                               const adsep::dsp::ComplexSpectrogram& spec,
                               const FlatParameters& params, const std::vector<double>& weights);

// PIT SI-SNR training loss of the channel-0 masked estimates (mixture phase),
// the same computation as train::training_step.
long double training_loss(const adsep::model::ModelConfig& cfg,
                          const adsep::dsp::ComplexSpectrogram& mixture_spec,
                          const std::vector<std::vector<double>>& references, std::size_t length,
                          const FlatParameters& params);

// Adapts an oracle to graph::grad_check's evaluator signature.
template <class ParameterSet>
std::function<long double(const ParameterSet&)> evaluator(
    std::function<long double(const FlatParameters&)> f) {
  return [f = std::move(f)](const ParameterSet& p) { return f(flatten(p)); };
}

}  // namespace oracle
