#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "gmvp/autodiff.hpp"
#include "gmvp/param_store.hpp"

namespace gmvp {

// Scalar objective built on a fresh tape from the given parameters. Must be
// deterministic: any randomness has to come from state pinned inside the callable.
using ScalarObjective = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Central-difference check of every parameter entry. Values passed through
// stop_gradient are held at their unperturbed values during the numeric pass. Error per entry is
// |analytic - numeric| / max(1, |analytic|, |numeric|); the maximum is returned.
// Throws NumericError if the objective is non-finite at a perturbed point.
GradCheckResult grad_check(const ScalarObjective& f, const ParamStore& params, double eps = 1e-5);

}  // namespace gmvp
