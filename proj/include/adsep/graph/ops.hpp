#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adsep/graph/graph.hpp"

namespace adsep::graph::inline ADSEP_REAL_NS {

enum class Transpose { no, yes };

// a: (..., K) times b: (K, N) -> (..., N); with Transpose::yes b is (N, K).
// Batched form: a (B, M, K) times b (B, K, N) -> (B, M, N), or b (B, N, K)
// with Transpose::yes.
Var matmul(Var a, Var b, Transpose transpose_b = Transpose::no);

Var add(Var a, Var b);                // equal shapes
Var add_bias(Var a, Var bias);        // bias broadcast over the last axis
Var mul(Var a, Var b);                // element-wise, equal shapes
Var scale(Var a, Real factor);

Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var permute(Var a, const std::vector<std::size_t>& axes);  // out.dim(i) = a.dim(axes[i])
Var reshape(Var a, Shape shape);

Var mean(Var a, std::size_t axis);  // removes the axis
Var sum(Var a);                     // rank-0 result

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var softmax(Var a, std::size_t axis);

inline constexpr Real kLayerNormEps = 1e-5;

// Normalises every vector along the last axis to zero mean and unit population
// variance, then applies gain and bias (both rank 1, length = last dim).
Var layer_norm(Var a, Var gain, Var bias, Real eps = kLayerNormEps);

}  // namespace adsep::graph::inline ADSEP_REAL_NS
