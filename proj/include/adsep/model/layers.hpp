#pragma once

#include <random>
#include <string>

#include "adsep/graph/graph.hpp"
#include "adsep/model/config.hpp"

namespace adsep::model::inline ADSEP_REAL_NS {

// Multi-head self-attention across the channel axis, applied independently at
// every frame, followed by a position-wise ReLU layer and a residual add.
//
//   x:        C x T x in_dim      (in_dim may exceed N for relational input)
//   residual: C x T x N
//
// Parameters under `prefix`: head{i}.{WQ,WK,WV} (E x in_dim), head{i}.{bQ,bK,bV}
// (E), ffn.W (N x E*D), ffn.b (N). For every output channel the attention
// weights over source channels sum to one, so the layer is equivariant to
// channel permutations.
graph::Var channel_attention(graph::Var x, graph::Var residual, const std::string& prefix,
                             const ModelConfig& cfg, const graph::ParameterSet& params);

// Bidirectional LSTM with output projection, shared by all channels.
//
//   x: C x T x in_dim  ->  C x T x N
//
// Parameters under `prefix`: {fwd,bwd}.W_ih (4H x in_dim), {fwd,bwd}.W_hh
// (4H x H), {fwd,bwd}.b (4H, gate order i, f, g, o), proj.W (N x 2H), proj.b.
graph::Var temporal_layer(graph::Var x, const std::string& prefix, const ModelConfig& cfg,
                          const graph::ParameterSet& params);

// Two independent affine + sigmoid heads over pooled T x N features,
// stacked to S x T x N.
graph::Var mask_heads(graph::Var pooled, const ModelConfig& cfg,
                      const graph::ParameterSet& params);

// Parameter allocation helpers, uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void add_channel_attention_params(graph::ParameterSet& params, const std::string& prefix,
                                  std::size_t in_dim, const ModelConfig& cfg,
                                  std::mt19937_64& rng);
void add_temporal_params(graph::ParameterSet& params, const std::string& prefix,
                         std::size_t in_dim, const ModelConfig& cfg, std::mt19937_64& rng);
void add_mask_head_params(graph::ParameterSet& params, const ModelConfig& cfg,
                          std::mt19937_64& rng);

// Looks up a parameter by name and binds it to the graph, or throws
// std::invalid_argument naming the missing tensor.
graph::Var bind(graph::Graph& g, const graph::ParameterSet& params, const std::string& name);

}  // namespace adsep::model::inline ADSEP_REAL_NS
