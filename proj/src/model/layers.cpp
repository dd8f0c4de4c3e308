#include "adsep/model/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "adsep/graph/ops.hpp"

namespace adsep::model::inline ADSEP_REAL_NS {

using graph::Shape;
using graph::Tensor;
using graph::Transpose;
using graph::Var;

namespace {

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> ud(-bound, bound);
  for (auto& v : t.data()) v = ud(rng);
  return t;
}

std::string head_name(const std::string& prefix, std::size_t i, const char* what) {
  return prefix + ".head" + std::to_string(i) + "." + what;
}

// Stacks the per-head E x in_dim projections into one (D*E) x in_dim matrix.
Var stacked_heads(graph::Graph& g, const graph::ParameterSet& params, const std::string& prefix,
                  std::size_t heads, const char* w, const char* b, Var& bias_out) {
  std::vector<Var> ws, bs;
  for (std::size_t i = 0; i < heads; ++i) {
    ws.push_back(model::bind(g, params, head_name(prefix, i, w)));
    bs.push_back(model::bind(g, params, head_name(prefix, i, b)));
  }
  bias_out = heads == 1 ? bs.front() : graph::concat(bs, 0);
  return heads == 1 ? ws.front() : graph::concat(ws, 0);
}

// C x T x (D*E) -> (T*D) x C x E
Var split_heads(Var x, std::size_t c, std::size_t t, std::size_t d, std::size_t e) {
  Var r = graph::reshape(x, {c, t, d, e});
  return graph::reshape(graph::permute(r, {1, 2, 0, 3}), {t * d, c, e});
}

// (T*D) x C x E -> C x T x (D*E)
Var merge_heads(Var x, std::size_t c, std::size_t t, std::size_t d, std::size_t e) {
  Var r = graph::reshape(x, {t, d, c, e});
  return graph::reshape(graph::permute(r, {2, 0, 1, 3}), {c, t, d * e});
}

}  // namespace

Var bind(graph::Graph& g, const graph::ParameterSet& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::invalid_argument("missing parameter '" + name + "'");
  return g.parameter(name, it->second);
}

Var channel_attention(Var x, Var residual, const std::string& prefix, const ModelConfig& cfg,
                      const graph::ParameterSet& params) {
  graph::Graph& g = *x.graph;
  const Shape s = x.shape();
  if (s.size() != 3) throw std::invalid_argument("channel_attention: expected C x T x N input");
  const std::size_t c = s[0], t = s[1];
  const std::size_t d = cfg.num_heads, e = cfg.embed_dim;

  Var bq, bk, bv;
  Var wq = stacked_heads(g, params, prefix, d, "WQ", "bQ", bq);
  Var wk = stacked_heads(g, params, prefix, d, "WK", "bK", bk);
  Var wv = stacked_heads(g, params, prefix, d, "WV", "bV", bv);

  Var q = split_heads(graph::add_bias(graph::matmul(x, wq, Transpose::yes), bq), c, t, d, e);
  // q . bK is the same for every source channel, so the softmax cancels it
  // exactly. Dropping the term keeps bK's (identically zero) gradient exact.
  (void)bk;
  Var k = split_heads(graph::matmul(x, wk, Transpose::yes), c, t, d, e);
  Var v = split_heads(graph::add_bias(graph::matmul(x, wv, Transpose::yes), bv), c, t, d, e);

  // scores[b, out, src] = q_out . k_src; normalised over source channels.
  Var scores = graph::matmul(q, k, Transpose::yes);
  if (cfg.scale_attention) scores = graph::scale(scores, 1.0 / std::sqrt(static_cast<double>(e)));
  Var attn = graph::softmax(scores, 2);
  Var y = merge_heads(graph::matmul(attn, v), c, t, d, e);

  Var z = graph::relu(graph::add_bias(
      graph::matmul(y, model::bind(g, params, prefix + ".ffn.W"), Transpose::yes),
      model::bind(g, params, prefix + ".ffn.b")));
  return graph::add(z, residual);
}

namespace {

// One LSTM direction over a precomputed input projection laid out T x C x 4H.
// Returns T hidden states of shape C x H indexed by time.
std::vector<Var> lstm_direction(Var projected, Var w_hh, std::size_t frames, std::size_t c,
                                std::size_t h, bool reverse) {
  std::vector<Var> states(frames);
  Var hidden, cell;
  for (std::size_t step = 0; step < frames; ++step) {
    const std::size_t t = reverse ? frames - 1 - step : step;
    Var gates = graph::reshape(graph::slice(projected, 0, t, t + 1), {c, 4 * h});
    // Zero initial state: the recurrent term vanishes on the first step.
    if (step > 0) gates = graph::add(gates, graph::matmul(hidden, w_hh, Transpose::yes));
    Var in_gate = graph::sigmoid(graph::slice(gates, 1, 0, h));
    Var forget_gate = graph::sigmoid(graph::slice(gates, 1, h, 2 * h));
    Var candidate = graph::tanh(graph::slice(gates, 1, 2 * h, 3 * h));
    Var out_gate = graph::sigmoid(graph::slice(gates, 1, 3 * h, 4 * h));
    Var update = graph::mul(in_gate, candidate);
    cell = step > 0 ? graph::add(graph::mul(forget_gate, cell), update) : update;
    hidden = graph::mul(out_gate, graph::tanh(cell));
    states[t] = hidden;
  }
  return states;
}

}  // namespace

Var temporal_layer(Var x, const std::string& prefix, const ModelConfig& cfg,
                   const graph::ParameterSet& params) {
  graph::Graph& g = *x.graph;
  const Shape s = x.shape();
  if (s.size() != 3) throw std::invalid_argument("temporal_layer: expected C x T x N input");
  const std::size_t c = s[0], t = s[1], h = cfg.hidden;

  std::vector<Var> directions;
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string p = prefix + "." + dir;
    Var projected = graph::add_bias(
        graph::matmul(x, model::bind(g, params, p + ".W_ih"), Transpose::yes), model::bind(g, params, p + ".b"));
    projected = graph::permute(projected, {1, 0, 2});  // T x C x 4H
    auto states = lstm_direction(projected, model::bind(g, params, p + ".W_hh"), t, c, h,
                                 std::string(dir) == "bwd");
    Var stacked = graph::reshape(graph::concat(states, 0), {t, c, h});
    directions.push_back(graph::permute(stacked, {1, 0, 2}));  // C x T x H
  }
  Var both = graph::concat(directions, 2);
  return graph::add_bias(graph::matmul(both, model::bind(g, params, prefix + ".proj.W"), Transpose::yes),
                         model::bind(g, params, prefix + ".proj.b"));
}

Var mask_heads(Var pooled, const ModelConfig& cfg, const graph::ParameterSet& params) {
  graph::Graph& g = *pooled.graph;
  const Shape s = pooled.shape();
  if (s.size() != 2) throw std::invalid_argument("mask_heads: expected T x N input");
  std::vector<Var> masks;
  for (std::size_t k = 0; k < cfg.num_sources; ++k) {
    const std::string p = "head" + std::to_string(k);
    Var m = graph::sigmoid(graph::add_bias(
        graph::matmul(pooled, model::bind(g, params, p + ".W"), Transpose::yes), model::bind(g, params, p + ".b")));
    masks.push_back(graph::reshape(m, {1, s[0], cfg.feature_dim}));
  }
  return graph::concat(masks, 0);
}

void add_channel_attention_params(graph::ParameterSet& params, const std::string& prefix,
                                  std::size_t in_dim, const ModelConfig& cfg,
                                  std::mt19937_64& rng) {
  const std::size_t e = cfg.embed_dim, n = cfg.feature_dim;
  const double bound_in = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (std::size_t i = 0; i < cfg.num_heads; ++i) {
    for (const char* w : {"Q", "K", "V"}) {
      params[head_name(prefix, i, (std::string("W") + w).c_str())] =
          uniform_tensor({e, in_dim}, bound_in, rng);
      params[head_name(prefix, i, (std::string("b") + w).c_str())] =
          uniform_tensor({e}, bound_in, rng);
    }
  }
  const std::size_t ffn_in = e * cfg.num_heads;
  const double bound_ffn = 1.0 / std::sqrt(static_cast<double>(ffn_in));
  params[prefix + ".ffn.W"] = uniform_tensor({n, ffn_in}, bound_ffn, rng);
  params[prefix + ".ffn.b"] = uniform_tensor({n}, bound_ffn, rng);
}

void add_temporal_params(graph::ParameterSet& params, const std::string& prefix,
                         std::size_t in_dim, const ModelConfig& cfg, std::mt19937_64& rng) {
  const std::size_t h = cfg.hidden, n = cfg.feature_dim;
  const double bound_in = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double bound_h = 1.0 / std::sqrt(static_cast<double>(h));
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string p = prefix + "." + dir;
    params[p + ".W_ih"] = uniform_tensor({4 * h, in_dim}, bound_in, rng);
    params[p + ".W_hh"] = uniform_tensor({4 * h, h}, bound_h, rng);
    Tensor b = uniform_tensor({4 * h}, bound_in, rng);
    for (std::size_t j = h; j < 2 * h; ++j) b[j] = 1.0;  // forget gate
    params[p + ".b"] = std::move(b);
  }
  const double bound_proj = 1.0 / std::sqrt(static_cast<double>(2 * h));
  params[prefix + ".proj.W"] = uniform_tensor({n, 2 * h}, bound_proj, rng);
  params[prefix + ".proj.b"] = uniform_tensor({n}, bound_proj, rng);
}

void add_mask_head_params(graph::ParameterSet& params, const ModelConfig& cfg,
                          std::mt19937_64& rng) {
  const std::size_t n = cfg.feature_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < cfg.num_sources; ++k) {
    const std::string p = "head" + std::to_string(k);
    params[p + ".W"] = uniform_tensor({n, n}, bound, rng);
    params[p + ".b"] = uniform_tensor({n}, bound, rng);
  }
}

}  // namespace adsep::model::inline ADSEP_REAL_NS
