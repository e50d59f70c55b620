#include "gmvp/param_store.hpp"

#include <cmath>

#include "gmvp/errors.hpp"

namespace gmvp {

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  auto [it, inserted] = params_.emplace(name, std::move(value));
  if (!inserted) throw ConfigError("duplicate parameter name: " + name);
  return it->second;
}

Tensor& ParamStore::add_weight(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                               Rng& rng) {
  Tensor w({fan_in, fan_out});
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  return add(name, std::move(w));
}

Tensor& ParamStore::add_bias(const std::string& name, std::size_t width) {
  return add(name, Tensor({1, width}));
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void ParamStore::copy_prefix_from(const ParamStore& other, const std::string& prefix) {
  for (const auto& [name, t] : other) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    params_.insert_or_assign(name, t);
  }
}

}  // namespace gmvp
