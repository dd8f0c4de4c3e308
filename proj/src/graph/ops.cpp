#include "adsep/graph/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adsep::graph::inline ADSEP_REAL_NS {
namespace {

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_string(a) + " and " +
                              shape_string(b));
}

Graph& same_graph(const std::string& op, Var a, Var b) {
  if (a.graph == nullptr || a.graph != b.graph)
    throw std::invalid_argument(op + ": operands belong to different graphs");
  return *a.graph;
}

// C (M x N) += A (M x K) * B (K x N), all row-major. The k-loop order is fixed
// so identical rows of A always produce bit-identical rows of C.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b,
             Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* ci = c + i * n;
    const Real* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = ai[p];
      const Real* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C (K x N) += A^T * B with A (M x K) and B (M x N).
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b,
             Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* ai = a + i * k;
    const Real* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = ai[p];
      Real* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

// Row-major (rows x cols) -> (cols x rows).
std::vector<Real> transposed(const Real* src, std::size_t rows, std::size_t cols) {
  std::vector<Real> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  return out;
}

template <typename Fwd, typename Deriv>
Var unary(const std::string& op, Var a, Fwd fwd, Deriv deriv_from_output) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return a.graph->record(op, std::move(y), {a}, [deriv_from_output](Graph& g, std::size_t node) {
    const std::size_t in = g.inputs(node)[0];
    Tensor* gx = g.grad_target(in);
    if (!gx) return;
    const Tensor& gy = g.grad(node);
    const Tensor& y = g.value(node);
    const Tensor& x = g.value(in);
    for (std::size_t i = 0; i < gy.size(); ++i)
      (*gx)[i] += gy[i] * deriv_from_output(x[i], y[i]);
  });
}

// outer x len x inner decomposition of a shape around one axis.
struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Var matmul(Var a, Var b, Transpose transpose_b) {
  Graph& g = same_graph("matmul", a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool tb = transpose_b == Transpose::yes;

  if (sb.size() == 2) {
    if (sa.empty()) shape_error("matmul", sa, sb);
    const std::size_t k = sa.back();
    const std::size_t bk = tb ? sb[1] : sb[0];
    const std::size_t n = tb ? sb[0] : sb[1];
    if (k != bk) shape_error("matmul", sa, sb);
    const std::size_t m = shape_size(sa) / std::max<std::size_t>(k, 1);
    Shape out_shape(sa.begin(), sa.end() - 1);
    out_shape.push_back(n);
    Tensor y(out_shape);
    if (tb) {
      auto bt = transposed(b.value().data().data(), n, k);
      gemm_nn(m, k, n, a.value().data().data(), bt.data(), y.data().data());
    } else {
      gemm_nn(m, k, n, a.value().data().data(), b.value().data().data(), y.data().data());
    }
    return g.record("matmul", std::move(y), {a, b}, [m, k, n, tb](Graph& g, std::size_t node) {
      const std::size_t ia = g.inputs(node)[0], ib = g.inputs(node)[1];
      const Real* gy = g.grad(node).data().data();
      const Real* av = g.value(ia).data().data();
      const Real* bv = g.value(ib).data().data();
      if (Tensor* ga = g.grad_target(ia)) {
        if (tb) {
          gemm_nn(m, n, k, gy, bv, ga->data().data());  // dA = dY W
        } else {
          auto bt = transposed(bv, k, n);
          gemm_nn(m, n, k, gy, bt.data(), ga->data().data());  // dA = dY B^T
        }
      }
      if (Tensor* gb = g.grad_target(ib)) {
        if (tb) {
          gemm_tn(m, n, k, gy, av, gb->data().data());  // dW = dY^T A
        } else {
          gemm_tn(m, k, n, av, gy, gb->data().data());  // dB = A^T dY
        }
      }
    });
  }

  if (sb.size() == 3) {
    if (sa.size() != 3 || sa[0] != sb[0]) shape_error("matmul", sa, sb);
    const std::size_t batch = sa[0], m = sa[1], k = sa[2];
    const std::size_t bk = tb ? sb[2] : sb[1];
    const std::size_t n = tb ? sb[1] : sb[2];
    if (k != bk) shape_error("matmul", sa, sb);
    Tensor y(Shape{batch, m, n});
    const Real* av = a.value().data().data();
    const Real* bv = b.value().data().data();
    for (std::size_t p = 0; p < batch; ++p) {
      const Real* bp = bv + p * k * n;
      std::vector<Real> bt;
      if (tb) {
        bt = transposed(bp, n, k);
        bp = bt.data();
      }
      gemm_nn(m, k, n, av + p * m * k, bp, y.data().data() + p * m * n);
    }
    return g.record("matmul", std::move(y), {a, b},
                    [batch, m, k, n, tb](Graph& g, std::size_t node) {
      const std::size_t ia = g.inputs(node)[0], ib = g.inputs(node)[1];
      const Real* gy = g.grad(node).data().data();
      const Real* av = g.value(ia).data().data();
      const Real* bv = g.value(ib).data().data();
      Tensor* ga = g.grad_target(ia);
      Tensor* gb = g.grad_target(ib);
      for (std::size_t p = 0; p < batch; ++p) {
        const Real* gyp = gy + p * m * n;
        const Real* ap = av + p * m * k;
        const Real* bp = bv + p * k * n;
        if (ga) {
          if (tb) {
            gemm_nn(m, n, k, gyp, bp, ga->data().data() + p * m * k);
          } else {
            auto bt = transposed(bp, k, n);
            gemm_nn(m, n, k, gyp, bt.data(), ga->data().data() + p * m * k);
          }
        }
        if (gb) {
          if (tb) {
            gemm_tn(m, n, k, gyp, ap, gb->data().data() + p * k * n);
          } else {
            gemm_tn(m, k, n, ap, gyp, gb->data().data() + p * k * n);
          }
        }
      }
    });
  }
  shape_error("matmul", sa, sb);
}

Var add(Var a, Var b) {
  Graph& g = same_graph("add", a, b);
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tensor y(a.shape());
  const Tensor& x1 = a.value();
  const Tensor& x2 = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x1[i] + x2[i];
  return g.record("add", std::move(y), {a, b}, [](Graph& g, std::size_t node) {
    const Tensor& gy = g.grad(node);
    for (std::size_t in : g.inputs(node)) {
      if (Tensor* gx = g.grad_target(in))
        for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  Graph& g = same_graph("add_bias", a, bias);
  const Shape& sa = a.shape();
  if (sa.empty() || bias.shape().size() != 1 || bias.shape()[0] != sa.back())
    shape_error("add_bias", sa, bias.shape());
  const std::size_t n = sa.back();
  const std::size_t rows = shape_size(sa) / std::max<std::size_t>(n, 1);
  Tensor y(sa);
  const Tensor& x = a.value();
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] = x[r * n + j] + bv[j];
  return g.record("add_bias", std::move(y), {a, bias}, [rows, n](Graph& g, std::size_t node) {
    const Tensor& gy = g.grad(node);
    if (Tensor* gx = g.grad_target(g.inputs(node)[0]))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
    if (Tensor* gb = g.grad_target(g.inputs(node)[1]))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += gy[r * n + j];
  });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph("mul", a, b);
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Tensor y(a.shape());
  const Tensor& x1 = a.value();
  const Tensor& x2 = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x1[i] * x2[i];
  return g.record("mul", std::move(y), {a, b}, [](Graph& g, std::size_t node) {
    const std::size_t ia = g.inputs(node)[0], ib = g.inputs(node)[1];
    const Tensor& gy = g.grad(node);
    if (Tensor* ga = g.grad_target(ia)) {
      const Tensor& bv = g.value(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * bv[i];
    }
    if (Tensor* gb = g.grad_target(ib)) {
      const Tensor& av = g.value(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * av[i];
    }
  });
}

Var scale(Var a, Real factor) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * factor;
  return a.graph->record("scale", std::move(y), {a}, [factor](Graph& g, std::size_t node) {
    if (Tensor* gx = g.grad_target(g.inputs(node)[0])) {
      const Tensor& gy = g.grad(node);
      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i] * factor;
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Graph& g = *parts.front().graph;
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw std::invalid_argument("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.graph != &g) throw std::invalid_argument("concat: operands belong to different graphs");
    const Shape& s = p.shape();
    if (s.size() != first.size()) shape_error("concat", first, s);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i]) shape_error("concat", first, s);
    out_shape[axis] += s[axis];
  }
  const AxisSplit out_split = split_at(out_shape, axis);
  Tensor y(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const AxisSplit s = split_at(p.shape(), axis);
    const Tensor& x = p.value();
    for (std::size_t o = 0; o < s.outer; ++o)
      std::copy_n(x.data().data() + o * s.len * s.inner, s.len * s.inner,
                  y.data().data() + (o * out_split.len + offset) * s.inner);
    offset += s.len;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record("concat", std::move(y), std::move(inputs),
                  [axis, offsets, out_split](Graph& g, std::size_t node) {
    const Tensor& gy = g.grad(node);
    const auto& ins = g.inputs(node);
    for (std::size_t k = 0; k < ins.size(); ++k) {
      Tensor* gx = g.grad_target(ins[k]);
      if (!gx) continue;
      const AxisSplit s = split_at(gx->shape(), axis);
      for (std::size_t o = 0; o < s.outer; ++o) {
        const Real* src = gy.data().data() + (o * out_split.len + offsets[k]) * s.inner;
        Real* dst = gx->data().data() + o * s.len * s.inner;
        for (std::size_t i = 0; i < s.len * s.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& sa = a.shape();
  if (axis >= sa.size() || begin >= end || end > sa[axis])
    throw std::invalid_argument("slice: range [" + std::to_string(begin) + "," +
                                std::to_string(end) + ") on axis " + std::to_string(axis) +
                                " of shape " + shape_string(sa));
  const AxisSplit s = split_at(sa, axis);
  Shape out_shape = sa;
  out_shape[axis] = end - begin;
  const std::size_t len = end - begin;
  Tensor y(out_shape);
  const Tensor& x = a.value();
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(x.data().data() + (o * s.len + begin) * s.inner, len * s.inner,
                y.data().data() + o * len * s.inner);
  return a.graph->record("slice", std::move(y), {a}, [s, begin, len](Graph& g, std::size_t node) {
    Tensor* gx = g.grad_target(g.inputs(node)[0]);
    if (!gx) return;
    const Tensor& gy = g.grad(node);
    for (std::size_t o = 0; o < s.outer; ++o) {
      const Real* src = gy.data().data() + o * len * s.inner;
      Real* dst = gx->data().data() + (o * s.len + begin) * s.inner;
      for (std::size_t i = 0; i < len * s.inner; ++i) dst[i] += src[i];
    }
  });
}

namespace {

// Maps each output flat index to its source flat index for a permutation.
std::vector<std::size_t> permutation_index(const Shape& in_shape,
                                           const std::vector<std::size_t>& axes) {
  const std::size_t rank = in_shape.size();
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * in_shape[i];
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = in_shape[axes[i]];
  const std::size_t total = shape_size(in_shape);
  std::vector<std::size_t> index(total);
  std::vector<std::size_t> counter(rank, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) src += counter[i] * in_stride[axes[i]];
    index[flat] = src;
    for (std::size_t i = rank; i-- > 0;) {
      if (++counter[i] < out_shape[i]) break;
      counter[i] = 0;
    }
  }
  return index;
}

}  // namespace

Var permute(Var a, const std::vector<std::size_t>& axes) {
  const Shape& sa = a.shape();
  std::vector<bool> seen(sa.size(), false);
  bool ok = axes.size() == sa.size();
  for (std::size_t ax : axes) {
    if (!ok || ax >= sa.size() || seen[ax]) {
      ok = false;
      break;
    }
    seen[ax] = true;
  }
  if (!ok) throw std::invalid_argument("permute: invalid axes for shape " + shape_string(sa));
  Shape out_shape(sa.size());
  for (std::size_t i = 0; i < sa.size(); ++i) out_shape[i] = sa[axes[i]];
  auto index = permutation_index(sa, axes);
  Tensor y(out_shape);
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < index.size(); ++i) y[i] = x[index[i]];
  return a.graph->record("permute", std::move(y), {a},
                         [index = std::move(index)](Graph& g, std::size_t node) {
    Tensor* gx = g.grad_target(g.inputs(node)[0]);
    if (!gx) return;
    const Tensor& gy = g.grad(node);
    for (std::size_t i = 0; i < index.size(); ++i) (*gx)[index[i]] += gy[i];
  });
}

Var reshape(Var a, Shape shape) {
  if (shape_size(shape) != a.value().size())
    throw std::invalid_argument("reshape: " + shape_string(a.shape()) + " -> " +
                                shape_string(shape));
  Tensor y = a.value().reshaped(std::move(shape));
  return a.graph->record("reshape", std::move(y), {a}, [](Graph& g, std::size_t node) {
    Tensor* gx = g.grad_target(g.inputs(node)[0]);
    if (!gx) return;
    const Tensor& gy = g.grad(node);
    for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
  });
}

Var mean(Var a, std::size_t axis) {
  const Shape& sa = a.shape();
  if (axis >= sa.size()) throw std::invalid_argument("mean: axis out of range for " +
                                                     shape_string(sa));
  const AxisSplit s = split_at(sa, axis);
  Shape out_shape = sa;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor y(out_shape);
  const Tensor& x = a.value();
  const Real inv = 1.0 / static_cast<Real>(s.len);
  for (std::size_t o = 0; o < s.outer; ++o) {
    Real* dst = y.data().data() + o * s.inner;
    for (std::size_t l = 0; l < s.len; ++l) {
      const Real* src = x.data().data() + (o * s.len + l) * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
    for (std::size_t i = 0; i < s.inner; ++i) dst[i] *= inv;
  }
  return a.graph->record("mean", std::move(y), {a}, [s, inv](Graph& g, std::size_t node) {
    Tensor* gx = g.grad_target(g.inputs(node)[0]);
    if (!gx) return;
    const Tensor& gy = g.grad(node);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t l = 0; l < s.len; ++l)
        for (std::size_t i = 0; i < s.inner; ++i)
          (*gx)[(o * s.len + l) * s.inner + i] += gy[o * s.inner + i] * inv;
  });
}

Var sum(Var a) {
  Real total = 0.0;
  for (Real v : a.value().data()) total += v;
  return a.graph->record("sum", Tensor::scalar(total), {a}, [](Graph& g, std::size_t node) {
    Tensor* gx = g.grad_target(g.inputs(node)[0]);
    if (!gx) return;
    const Real gy = g.grad(node)[0];
    for (auto& v : gx->data()) v += gy;
  });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a, [](Real x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](Real, Real y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](Real x) { return std::tanh(x); },
      [](Real, Real y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](Real x) { return x > 0.0 ? x : 0.0; },
      [](Real x, Real) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softmax(Var a, std::size_t axis) {
  const Shape& sa = a.shape();
  if (axis >= sa.size())
    throw std::invalid_argument("softmax: axis out of range for " + shape_string(sa));
  const AxisSplit s = split_at(sa, axis);
  const Tensor& x = a.value();
  Tensor y(sa);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.len * s.inner + i;
      Real mx = x[base];
      for (std::size_t l = 1; l < s.len; ++l) mx = std::max(mx, x[base + l * s.inner]);
      Real total = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) {
        const Real e = std::exp(x[base + l * s.inner] - mx);
        y[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.len; ++l) y[base + l * s.inner] /= total;
    }
  }
  return a.graph->record("softmax", std::move(y), {a}, [s](Graph& g, std::size_t node) {
    Tensor* gx = g.grad_target(g.inputs(node)[0]);
    if (!gx) return;
    const Tensor& gy = g.grad(node);
    const Tensor& y = g.value(node);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.len * s.inner + i;
        Real dot = 0.0;
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t k = base + l * s.inner;
          dot += gy[k] * y[k];
        }
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t k = base + l * s.inner;
          (*gx)[k] += y[k] * (gy[k] - dot);
        }
      }
    }
  });
}

Var layer_norm(Var a, Var gain, Var bias, Real eps) {
  Graph& g = same_graph("layer_norm", a, gain);
  same_graph("layer_norm", a, bias);
  const Shape& sa = a.shape();
  if (sa.empty() || gain.shape() != Shape{sa.back()} || bias.shape() != Shape{sa.back()})
    shape_error("layer_norm", sa, gain.shape());
  const std::size_t n = sa.back();
  const std::size_t rows = shape_size(sa) / std::max<std::size_t>(n, 1);
  const Tensor& x = a.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor y(sa);
  // Saved per row: normalised values and 1/sqrt(var + eps).
  std::vector<Real> xhat(x.size());
  std::vector<Real> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = x.data().data() + r * n;
    Real mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<Real>(n);
    Real var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<Real>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[r * n + j] = (xr[j] - mu) * inv_std[r];
      y[r * n + j] = xhat[r * n + j] * gv[j] + bv[j];
    }
  }
  return g.record("layer_norm", std::move(y), {a, gain, bias},
                  [rows, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                      Graph& g, std::size_t node) {
    const auto& ins = g.inputs(node);
    const Tensor& gy = g.grad(node);
    const Tensor& gv = g.value(ins[1]);
    if (Tensor* gx = g.grad_target(ins[0])) {
      const Real inv_n = 1.0 / static_cast<Real>(n);
      for (std::size_t r = 0; r < rows; ++r) {
        Real mean_d = 0.0, mean_dx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const Real d = gy[r * n + j] * gv[j];
          mean_d += d;
          mean_dx += d * xhat[r * n + j];
        }
        mean_d *= inv_n;
        mean_dx *= inv_n;
        for (std::size_t j = 0; j < n; ++j) {
          const Real d = gy[r * n + j] * gv[j];
          (*gx)[r * n + j] += inv_std[r] * (d - mean_d - xhat[r * n + j] * mean_dx);
        }
      }
    }
    if (Tensor* gg = g.grad_target(ins[1]))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) (*gg)[j] += gy[r * n + j] * xhat[r * n + j];
    if (Tensor* gb = g.grad_target(ins[2]))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += gy[r * n + j];
  });
}

}  // namespace adsep::graph::inline ADSEP_REAL_NS
