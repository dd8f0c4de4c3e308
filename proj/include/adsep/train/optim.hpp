#pragma once

#include <cstddef>
#include <cstdint>

#include "adsep/graph/tensor.hpp"

namespace adsep::train::inline ADSEP_REAL_NS {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive moment estimation with bias correction.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Updates `params` in place. Parameters without a gradient entry are left
  // untouched; a zero gradient leaves its parameter unchanged.
  void step(graph::ParameterSet& params, const graph::GradientMap& grads, double lr);

  std::uint64_t steps() const { return t_; }

  // Rounds the moment estimates to the given storage precision.
  void round_state(graph::Precision precision);

  // Moment tensors as "m.<name>" / "v.<name>", for checkpointing.
  graph::ParameterSet state() const;
  void load_state(const graph::ParameterSet& state, std::uint64_t steps);

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  graph::ParameterSet m_, v_;
};

// Scales all gradients by min(1, max_norm / ||g||) and returns ||g|| (global
// L2 norm over every entry) before scaling.
double clip_gradients(graph::GradientMap& grads, double max_norm);

}  // namespace adsep::train::inline ADSEP_REAL_NS
