#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "gmvp/encoders.hpp"
#include "gmvp/objectives.hpp"

namespace gmvp {

struct TrainConfig {
  double mask_ratio = 0.15;        // M
  std::size_t num_conformers = 5;  // C
  std::size_t batch_size = 32;     // K
  std::size_t epochs = 5;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  LossConfig loss;
  ModelConfig model;
  // Wall-clock seconds in the metrics stream break byte-for-byte reproducibility,
  // so they are only recorded on request.
  bool record_wall_time = false;

  void validate() const;
};

bool operator==(const GinConfig& a, const GinConfig& b);
bool operator==(const SchNetConfig& a, const SchNetConfig& b);
bool operator==(const ModelConfig& a, const ModelConfig& b);
bool operator==(const LossConfig& a, const LossConfig& b);
bool operator==(const TrainConfig& a, const TrainConfig& b);

// JSON mirrors the field names above. Unknown keys are rejected with ConfigError;
// missing keys keep their defaults.
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LossConfig& config);
LossConfig loss_config_from_json(const nlohmann::json& j);

}  // namespace gmvp
