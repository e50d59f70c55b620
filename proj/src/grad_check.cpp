#include "gmvp/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "gmvp/errors.hpp"

namespace gmvp {

namespace {

double evaluate(const ScalarObjective& f, const ParamStore& params,
                const std::vector<Tensor>& detached) {
  Tape tape(/*record_gradients=*/false);
  tape.replay_stop_gradients(&detached);
  const double v = f(tape, params).value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: objective is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarObjective& f, const ParamStore& params, double eps) {
  // Stop-gradient targets stay at their unperturbed values in the numeric pass.
  std::vector<Tensor> detached;
  Tape tape;
  tape.capture_stop_gradients(&detached);
  const Var loss = f(tape, params);
  const auto analytic = backward(loss, tape, params);

  GradCheckResult result;
  ParamStore probe = params;
  for (const auto& [name, value] : params) {
    Tensor& entry = probe.at(name);
    const Tensor& g = analytic.at(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double original = entry[i];
      entry[i] = original + eps;
      const double up = evaluate(f, probe, detached);
      entry[i] = original - eps;
      const double down = evaluate(f, probe, detached);
      entry[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({1.0, std::abs(g[i]), std::abs(numeric)});
      const double err = std::abs(g[i] - numeric) / denom;
      ++result.entries_checked;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, err);
        result.worst_param = name;
        result.worst_index = i;
        result.analytic = g[i];
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace gmvp
