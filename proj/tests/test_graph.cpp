#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include "adsep/graph/grad_check.hpp"
#include "adsep/graph/ops.hpp"

using namespace adsep::graph;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> ud(lo, hi);
  for (auto& v : t.data()) v = ud(rng);
  return t;
}

// Random inputs bounded away from zero, for ops with a kink at the origin.
Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor t = random_tensor(std::move(shape), rng, 0.05, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.data())
    if (sign(rng)) v = -v;
  return t;
}

// Reduces an op output to a scalar through a random weighting so every output
// entry contributes a distinct gradient.
Var weighted_sum(Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var w = y.graph->constant(random_tensor(y.shape(), rng));
  return sum(mul(y, w));
}

double check_op(const std::function<Var(Graph&, const ParameterSet&)>& body,
                const ParameterSet& params) {
  auto build = [&](Graph& g, const ParameterSet& p) { return weighted_sum(body(g, p), 99); };
  return grad_check(build, params, 1e-5).max_relative_error;
}

}  // namespace

TEST_CASE("softmax over a length-1 axis is 1") {
  Graph g;
  Var x = g.constant(Tensor({1}, {3.7}));
  CHECK(softmax(x, 0).value()[0] == 1.0);
}

TEST_CASE("relu") {
  Graph g;
  auto y = relu(g.constant(Tensor({3}, {-1.0, 0.0, 2.0}))).value();
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.0);
}

TEST_CASE("layer norm of [1,2,3] with unit gain and zero bias") {
  Graph g;
  Var x = g.constant(Tensor({3}, {1.0, 2.0, 3.0}));
  Var gain = g.constant(Tensor({3}, 1.0));
  Var bias = g.constant(Tensor({3}, 0.0));
  auto y = layer_norm(x, gain, bias).value();
  // mean 2, population variance 2/3
  const double s = 1.0 / std::sqrt(2.0 / 3.0 + 1e-5);
  CHECK(y[0] == doctest::Approx(-s).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(0.0));
  CHECK(y[2] == doctest::Approx(s).epsilon(1e-12));
  CHECK(std::abs(y[0] + 1.2247) < 1e-4);
  CHECK(std::abs(y[2] - 1.2247) < 1e-4);
}

TEST_CASE("d sum(x)/dx is ones") {
  ParameterSet p{{"x", Tensor({2, 3, 4}, 0.5)}};
  Graph g;
  Var loss = sum(g.parameter("x", p.at("x")));
  g.backward(loss);
  auto grads = g.parameter_gradients();
  for (double v : grads.at("x").data()) CHECK(v == 1.0);
}

TEST_CASE("quadratic form gradient is A^T A x and matches finite differences") {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({4, 3}, rng);
  ParameterSet p{{"x", random_tensor({3}, rng)}};
  auto build = [&](Graph& g, const ParameterSet& ps) {
    Var ax = matmul(g.parameter("x", ps.at("x")), g.constant(a), Transpose::yes);
    return scale(sum(mul(ax, ax)), 0.5);
  };
  Graph g;
  Var loss = build(g, p);
  g.backward(loss);
  const Tensor grad = g.parameter_gradients().at("x");
  const Tensor& x = p.at("x");
  for (std::size_t j = 0; j < 3; ++j) {
    double expected = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      double axi = 0.0;
      for (std::size_t k = 0; k < 3; ++k) axi += a[i * 3 + k] * x[k];
      expected += a[i * 3 + j] * axi;
    }
    CHECK(grad[j] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(grad_check(build, p, 1e-5).max_relative_error < 1e-6);
}

TEST_CASE("sigmoid then mean matches finite differences") {
  std::mt19937_64 rng(2);
  ParameterSet p{{"x", random_tensor({3, 4}, rng, -2.0, 2.0)}};
  auto build = [](Graph& g, const ParameterSet& ps) {
    return mean(mean(sigmoid(g.parameter("x", ps.at("x"))), 1), 0);
  };
  CHECK(grad_check(build, p, 1e-5).max_relative_error < 1e-6);
}

TEST_CASE("grad_check of a constant function reports zero") {
  ParameterSet p{{"x", Tensor({2}, 1.0)}};
  auto build = [](Graph& g, const ParameterSet& ps) {
    g.parameter("x", ps.at("x"));
    return g.constant(Tensor::scalar(4.0));
  };
  const auto r = grad_check(build, p, 1e-5);
  CHECK(r.max_relative_error == 0.0);
  CHECK(r.entries_checked == 2);
}

TEST_CASE("backward rejects a non-scalar loss") {
  Graph g;
  ParameterSet p{{"x", Tensor({2}, 1.0)}};
  Var x = g.parameter("x", p.at("x"));
  CHECK_THROWS_AS(g.backward(x), std::invalid_argument);
}

TEST_CASE("unused parameters receive zero gradients") {
  ParameterSet p{{"used", Tensor({2}, 1.0)}, {"unused", Tensor({3}, 2.0)}};
  Graph g;
  Var u = g.parameter("used", p.at("used"));
  g.parameter("unused", p.at("unused"));
  g.backward(sum(u));
  auto grads = g.parameter_gradients();
  REQUIRE(grads.at("unused").size() == 3);
  for (double v : grads.at("unused").data()) CHECK(v == 0.0);
}

TEST_CASE("shape errors name the op and both shapes") {
  Graph g;
  Var a = g.constant(Tensor({2, 3}));
  Var b = g.constant(Tensor({4, 5}));
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul: incompatible shapes [2,3] and [4,5]"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("add"), std::invalid_argument);
}

TEST_CASE("randomized gradient check for every op kind") {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    std::mt19937_64 rng(100 + trial);
    CAPTURE(trial);

    ParameterSet mm{{"a", random_tensor({2, 3, 4}, rng)}, {"b", random_tensor({4, 5}, rng)},
                    {"w", random_tensor({5, 4}, rng)}};
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return matmul(g.parameter("a", p.at("a")), g.parameter("b", p.at("b")));
          }, mm) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return matmul(g.parameter("a", p.at("a")), g.parameter("w", p.at("w")), Transpose::yes);
          }, mm) < 1e-6);

    ParameterSet bmm{{"a", random_tensor({3, 2, 4}, rng)}, {"b", random_tensor({3, 4, 5}, rng)},
                     {"bt", random_tensor({3, 5, 4}, rng)}};
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return matmul(g.parameter("a", p.at("a")), g.parameter("b", p.at("b")));
          }, bmm) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return matmul(g.parameter("a", p.at("a")), g.parameter("bt", p.at("bt")), Transpose::yes);
          }, bmm) < 1e-6);

    ParameterSet ew{{"x", away_from_zero({3, 4}, rng)}, {"y", random_tensor({3, 4}, rng)},
                    {"b", random_tensor({4}, rng)}};
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return add(g.parameter("x", p.at("x")), g.parameter("y", p.at("y")));
          }, ew) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return add_bias(g.parameter("x", p.at("x")), g.parameter("b", p.at("b")));
          }, ew) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return mul(g.parameter("x", p.at("x")), g.parameter("y", p.at("y")));
          }, ew) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return scale(g.parameter("x", p.at("x")), -1.7);
          }, ew) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return sigmoid(g.parameter("x", p.at("x")));
          }, ew) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return tanh(g.parameter("x", p.at("x")));
          }, ew) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return relu(g.parameter("x", p.at("x")));
          }, ew) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return sum(g.parameter("x", p.at("x")));
          }, ew) < 1e-6);

    ParameterSet t4{{"x", random_tensor({2, 3, 4, 5}, rng)}, {"y", random_tensor({2, 2, 4, 5}, rng)}};
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            const Var parts[] = {g.parameter("x", p.at("x")), g.parameter("y", p.at("y"))};
            return concat(parts, 1);
          }, t4) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return slice(g.parameter("x", p.at("x")), 2, 1, 3);
          }, t4) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return permute(g.parameter("x", p.at("x")), {2, 0, 3, 1});
          }, t4) < 1e-6);
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return reshape(g.parameter("x", p.at("x")), {6, 20});
          }, t4) < 1e-6);
    for (std::size_t axis = 0; axis < 4; ++axis) {
      CAPTURE(axis);
      CHECK(check_op([axis](Graph& g, const ParameterSet& p) {
              return mean(g.parameter("x", p.at("x")), axis);
            }, t4) < 1e-6);
      CHECK(check_op([axis](Graph& g, const ParameterSet& p) {
              return softmax(scale(g.parameter("x", p.at("x")), 3.0), axis);
            }, t4) < 1e-6);
    }

    ParameterSet ln{{"x", random_tensor({3, 6}, rng, -2.0, 2.0)},
                    {"gain", random_tensor({6}, rng, 0.5, 1.5)},
                    {"bias", random_tensor({6}, rng)}};
    CHECK(check_op([](Graph& g, const ParameterSet& p) {
            return layer_norm(g.parameter("x", p.at("x")), g.parameter("gain", p.at("gain")),
                              g.parameter("bias", p.at("bias")));
          }, ln) < 1e-6);
  }
}

TEST_CASE("backward is bitwise deterministic") {
  std::mt19937_64 rng(7);
  ParameterSet p{{"w", random_tensor({5, 4}, rng)}, {"x", random_tensor({3, 4}, rng)}};
  auto run = [&] {
    Graph g;
    Var h = tanh(matmul(g.parameter("x", p.at("x")), g.parameter("w", p.at("w")), Transpose::yes));
    Var loss = sum(softmax(h, 1));
    loss = sum(mul(softmax(h, 0), h));
    g.backward(loss);
    return g.parameter_gradients();
  };
  auto a = run();
  auto b = run();
  for (const auto& [name, t] : a)
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == b.at(name)[i]);
}

TEST_CASE("softmax sums to one and is shift invariant") {
  std::mt19937_64 rng(8);
  Tensor x = random_tensor({4, 7}, rng, -5.0, 5.0);
  Tensor shifted = x;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 7; ++c) shifted[r * 7 + c] += 10.0 * static_cast<double>(r) - 3.0;
  Graph g;
  auto y = softmax(g.constant(x), 1).value();
  auto ys = softmax(g.constant(shifted), 1).value();
  for (std::size_t r = 0; r < 4; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      total += y[r * 7 + c];
      CHECK(std::abs(y[r * 7 + c] - ys[r * 7 + c]) < 1e-12);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("f32 graphs round every op output to float") {
  Graph g(Precision::f32);
  Var x = g.constant(Tensor({1}, {0.1}));
  Var y = scale(x, 3.0);
  CHECK(x.value()[0] == static_cast<double>(0.1f));
  CHECK(y.value()[0] == static_cast<double>(static_cast<float>(static_cast<double>(0.1f) * 3.0)));
}
