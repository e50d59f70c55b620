#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "gmvp/rng.hpp"
#include "gmvp/tensor.hpp"

namespace gmvp {

// Named trainable tensors. Iteration is lexicographic by name.
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor>;

  // Throws ConfigError on a duplicate name.
  Tensor& add(const std::string& name, Tensor value);
  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for a [fan_in x fan_out] weight.
  Tensor& add_weight(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Tensor& add_bias(const std::string& name, std::size_t width);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }

  // Copies every parameter whose name starts with `prefix` from `other`, adding or
  // overwriting entries.
  void copy_prefix_from(const ParamStore& other, const std::string& prefix);

  friend bool operator==(const ParamStore& a, const ParamStore& b) { return a.params_ == b.params_; }

 private:
  Map params_;
};

}  // namespace gmvp
