#include "gmvp/adam.hpp"

#include <cmath>

#include "gmvp/errors.hpp"

namespace gmvp {

void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state) {
  for (const auto& [name, value] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ConfigError("adam_step: no gradient for parameter '" + name + "'");
    if (it->second.shape() != value.shape()) {
      throw ShapeError("adam_step: gradient shape mismatch for '" + name + "'");
    }
    if (!it->second.all_finite()) {
      throw NumericError("adam_step: non-finite gradient for parameter '" + name + "'");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (auto& [name, value] : params) {
    const Tensor& g = grads.at(name);
    Tensor& m = state.m.try_emplace(name, Tensor::zeros_like(value)).first->second;
    Tensor& v = state.v.try_emplace(name, Tensor::zeros_like(value)).first->second;
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace gmvp
