#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gmvp/checkpoint.hpp"
#include "gmvp/config.hpp"
#include "gmvp/molecule.hpp"

namespace gmvp {

struct MetricsRecord {
  std::uint64_t step = 0;
  double loss = 0.0;
  std::map<std::string, double> terms;
  double secs = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

// Append-only; steps must be strictly increasing.
class MetricsLog {
 public:
  void append(MetricsRecord record);
  const std::vector<MetricsRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  static std::string to_json_line(const MetricsRecord& record);
  std::string to_jsonl() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<MetricsRecord> records_;
};

struct PretrainOptions {
  // Continue from this checkpoint instead of initialising fresh parameters.
  const Checkpoint* resume = nullptr;
  // Stop once this many steps (in total) have completed.
  std::optional<std::uint64_t> stop_after_step;
  // Called after every step with the record just appended.
  std::function<void(const MetricsRecord&)> on_step;
};

struct PretrainResult {
  Checkpoint checkpoint;
  MetricsLog metrics;
};

// Number of optimisation steps per epoch for n records with batch size k. A trailing
// batch of a single record is dropped when there is more than one batch.
std::uint64_t steps_per_epoch(std::size_t n, std::size_t k);

// Multi-view pre-training: each step draws a batch in a seeded per-epoch order,
// samples one of the top-C conformers per record, masks both views, encodes them
// and applies the combined objective followed by one Adam update.
PretrainResult pretrain(const std::vector<MoleculeRecord>& dataset, const TrainConfig& config,
                        const PretrainOptions& options = {});

// Fresh model parameters exactly as pretrain() would initialise them for `config`.
ParamStore initial_params(const TrainConfig& config);

}  // namespace gmvp
