#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gmvp/param_store.hpp"
#include "gmvp/tensor.hpp"

namespace gmvp {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> m;  // first moments, created on first update
  std::map<std::string, Tensor> v;  // second moments

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam update of every parameter in `params`.
// Throws ConfigError for a missing gradient and NumericError for a non-finite one;
// parameters are left untouched in both cases.
void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state);

}  // namespace gmvp
