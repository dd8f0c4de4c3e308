#pragma once

#include <functional>
#include <string>

#include "adsep/graph/graph.hpp"

namespace adsep::graph::inline ADSEP_REAL_NS {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Builds a scalar loss from the parameters on the provided graph.
using LossBuilder = std::function<Var(Graph&, const ParameterSet&)>;

// Loss value at perturbed parameters, used for the finite differences. The
// default records `build` on an f64 graph; a higher-precision evaluator of the
// same function lowers the rounding noise of the differences.
using LossEvaluator = std::function<long double(const ParameterSet&)>;

// Compares backward() of `build` on an f64 graph against central differences
// for every entry of every parameter. The relative error of one entry is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const LossBuilder& build, const ParameterSet& params,
                           double eps = 1e-5, const LossEvaluator& evaluate = {});

}  // namespace adsep::graph::inline ADSEP_REAL_NS
