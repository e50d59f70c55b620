#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmvp/config.hpp"
#include "gmvp/probe.hpp"
#include "gmvp/synth.hpp"

namespace gmvp {

struct AblationCell {
  ContrastiveKind contrastive = ContrastiveKind::none;
  GenerativeKind generative = GenerativeKind::none;

  std::string name() const;  // e.g. "ebm_nce+vrr", "rr"
};

// The single-objective cells followed by every contrastive x generative pair.
std::vector<AblationCell> default_ablation_cells();

struct AblationConfig {
  TrainConfig train;  // loss kinds are overridden per cell
  SynthSpec data;     // data.seed is overridden per seed
  ProbeConfig probe;  // frozen multiclass probe on the diameter class by default
  std::vector<std::uint64_t> seeds{0};
  std::vector<AblationCell> cells = default_ablation_cells();

  AblationConfig();
  nlohmann::json to_json() const;
};

struct AblationCellResult {
  AblationCell cell;
  std::vector<double> probe_values;  // one per seed
  std::vector<double> final_losses;  // mean loss over the last 10% of steps, per seed
  double mean_probe = 0.0;
};

struct AblationReport {
  std::vector<std::uint64_t> seeds;
  std::string metric;
  std::vector<AblationCellResult> cells;
  double random_init = 0.0;  // probe value of an untrained encoder, averaged over seeds
  std::string config_digest;

  nlohmann::json to_json() const;
};

AblationReport run_ablation(const AblationConfig& config);

}  // namespace gmvp
