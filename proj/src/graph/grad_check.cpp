#include "adsep/graph/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace adsep::graph::inline ADSEP_REAL_NS {

GradCheckResult grad_check(const LossBuilder& build, const ParameterSet& params, double eps,
                           const LossEvaluator& evaluate) {
  GradientMap analytic;
  {
    Graph g(Precision::f64);
    Var loss = build(g, params);
    g.backward(loss);
    analytic = g.parameter_gradients();
  }
  LossEvaluator loss_at = evaluate;
  if (!loss_at)
    loss_at = [&build](const ParameterSet& p) -> long double {
      Graph g(Precision::f64);
      return build(g, p).value().item();
    };

  GradCheckResult result;
  ParameterSet probe = params;
  for (auto& [name, tensor] : probe) {
    const auto it = analytic.find(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const Real original = tensor[i];
      tensor[i] = original + eps;
      const long double up = loss_at(probe);
      tensor[i] = original - eps;
      const long double down = loss_at(probe);
      tensor[i] = original;

      const double numeric = static_cast<double>((up - down) / (2.0L * eps));
      const double exact = it == analytic.end() ? 0.0 : static_cast<double>(it->second[i]);
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double err = std::abs(exact - numeric) / denom;
      ++result.entries_checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = name;
        result.worst_index = i;
        result.analytic = exact;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace adsep::graph::inline ADSEP_REAL_NS
