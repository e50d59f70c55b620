#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace gmvp {

struct EvalReport {
  std::string task;
  std::string metric;
  double value = 0.0;                  // mean of per_seed
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed;
  std::string config_digest;           // 16 hex digits
  nlohmann::json extra = nlohmann::json::object();

  // Sets value to the mean of per_seed.
  void finalize();
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

// FNV-1a 64-bit hash of the canonical JSON dump, as 16 lowercase hex digits.
std::string config_digest(const nlohmann::json& config);

}  // namespace gmvp
