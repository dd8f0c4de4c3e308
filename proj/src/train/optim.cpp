#include "adsep/train/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace adsep::train::inline ADSEP_REAL_NS {

using graph::Real;
using graph::Tensor;

void Adam::step(graph::ParameterSet& params, const graph::GradientMap& grads, double lr) {
  ++t_;
  const Real b1 = cfg_.beta1, b2 = cfg_.beta2;
  const Real c1 = 1 - std::pow(b1, static_cast<Real>(t_));
  const Real c2 = 1 - std::pow(b2, static_cast<Real>(t_));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (g.shape() != p.shape())
      throw std::invalid_argument("Adam: gradient shape mismatch for '" + name + "'");
    auto mit = m_.try_emplace(name, p.shape()).first;
    auto vit = v_.try_emplace(name, p.shape()).first;
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const Real mh = m[i] / c1, vh = v[i] / c2;
      p[i] -= static_cast<Real>(lr) * mh / (std::sqrt(vh) + static_cast<Real>(cfg_.eps));
    }
  }
}

void Adam::round_state(graph::Precision precision) {
  for (auto* set : {&m_, &v_})
    for (auto& [name, t] : *set) graph::round_to(t.data(), precision);
}

graph::ParameterSet Adam::state() const {
  graph::ParameterSet out;
  for (const auto& [name, t] : m_) out["m." + name] = t;
  for (const auto& [name, t] : v_) out["v." + name] = t;
  return out;
}

void Adam::load_state(const graph::ParameterSet& state, std::uint64_t steps) {
  m_.clear();
  v_.clear();
  for (const auto& [name, t] : state) {
    if (name.rfind("m.", 0) == 0)
      m_[name.substr(2)] = t;
    else if (name.rfind("v.", 0) == 0)
      v_[name.substr(2)] = t;
    else
      throw std::invalid_argument("Adam: unexpected state tensor '" + name + "'");
  }
  t_ = steps;
}

double clip_gradients(graph::GradientMap& grads, double max_norm) {
  Real sq = 0;
  for (const auto& [name, g] : grads)
    for (Real v : g.data()) sq += v * v;
  const double norm = std::sqrt(static_cast<double>(sq));
  if (norm > max_norm && norm > 0.0) {
    const Real s = max_norm / norm;
    for (auto& [name, g] : grads)
      for (auto& v : g.data()) v *= s;
  }
  return norm;
}

}  // namespace adsep::train::inline ADSEP_REAL_NS
