#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "adsep/graph/tensor.hpp"

namespace adsep::graph::inline ADSEP_REAL_NS {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Accumulates into the gradients of a node's inputs given the node's own
// gradient. Called at most once per node during backward.
using BackwardFn = std::function<void(Graph&, std::size_t node)>;

// Tape of recorded ops in creation (hence topological) order.
class Graph {
 public:
  explicit Graph(Precision precision = Precision::f64) : precision_(precision) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Precision precision() const { return precision_; }

  Var constant(Tensor value);

  // Trainable leaf that refers to `value` without copying it; the tensor must
  // outlive the graph. Repeated calls with one name return the same node.
  Var parameter(const std::string& name, const Tensor& value);

  // Records an op output. The value is rounded to the graph precision.
  Var record(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return value(v.id); }
  const Tensor& value(std::size_t node) const;
  const std::vector<std::size_t>& inputs(std::size_t node) const { return nodes_[node].inputs; }
  const std::string& op(std::size_t node) const { return nodes_[node].op; }
  bool requires_grad(std::size_t node) const { return nodes_[node].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the loss with respect to this node (zeros if never reached).
  const Tensor& grad(std::size_t node) const;
  const Tensor& grad(Var v) const { return grad(v.id); }

  // Mutable gradient buffer of an input, allocated as zeros on first use.
  // Returns nullptr when the node does not require a gradient.
  Tensor* grad_target(std::size_t node);

  // Reverse sweep from a size-1 loss node.
  void backward(Var loss);

  // Gradient of every parameter registered on this graph.
  GradientMap parameter_gradients() const;

 private:
  struct Node {
    std::string op;
    Tensor value;
    const Tensor* external = nullptr;
    std::string parameter_name;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool has_grad = false;
    Tensor grad;
  };

  Precision precision_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> parameters_;
  std::vector<std::string> parameter_order_;
  mutable Tensor empty_grad_;
};

}  // namespace adsep::graph::inline ADSEP_REAL_NS
