#include "adsep/graph/graph.hpp"

#include <stdexcept>

namespace adsep::graph::inline ADSEP_REAL_NS {

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::constant(Tensor value) {
  round_to(value.data(), precision_);
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::parameter(const std::string& name, const Tensor& value) {
  if (auto it = parameters_.find(name); it != parameters_.end()) {
    if (nodes_[it->second].external != &value)
      throw std::invalid_argument("Graph::parameter: name '" + name +
                                  "' already bound to another tensor");
    return Var{this, it->second};
  }
  Node node;
  node.op = "parameter";
  node.external = &value;
  node.parameter_name = name;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  parameters_.emplace(name, nodes_.size() - 1);
  parameter_order_.push_back(name);
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node;
  node.op = std::move(op);
  round_to(value.data(), precision_);
  node.value = std::move(value);
  for (const auto& v : inputs) {
    if (v.graph != this)
      throw std::invalid_argument("Graph::record: op '" + node.op + "' mixes graphs");
    node.inputs.push_back(v.id);
    node.requires_grad = node.requires_grad || nodes_[v.id].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

const Tensor& Graph::value(std::size_t node) const {
  const auto& n = nodes_.at(node);
  return n.external ? *n.external : n.value;
}

const Tensor& Graph::grad(std::size_t node) const {
  const auto& n = nodes_.at(node);
  if (n.has_grad) return n.grad;
  empty_grad_ = Tensor(value(node).shape(), 0.0);
  return empty_grad_;
}

Tensor* Graph::grad_target(std::size_t node) {
  auto& n = nodes_[node];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor(value(node).shape(), 0.0);
    n.has_grad = true;
  }
  return &n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw std::invalid_argument("Graph::backward: loss from another graph");
  const auto& lv = value(loss.id);
  if (lv.size() != 1)
    throw std::invalid_argument("Graph::backward: loss must be scalar, got shape " +
                                shape_string(lv.shape()));
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  Tensor* seed = grad_target(loss.id);
  if (seed == nullptr) return;
  (*seed)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, i);
  }
}

GradientMap Graph::parameter_gradients() const {
  GradientMap out;
  for (const auto& name : parameter_order_) {
    const std::size_t id = parameters_.at(name);
    out.emplace(name, grad(id));
  }
  return out;
}

}  // namespace adsep::graph::inline ADSEP_REAL_NS
