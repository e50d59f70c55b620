#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gmvp/encoders.hpp"
#include "gmvp/molecule.hpp"
#include "gmvp/param_store.hpp"

namespace gmvp {

enum class ProbeMode { frozen_linear_probe, full_finetune };
enum class ProbeTask { binary, regression, multiclass };

std::string_view to_string(ProbeMode m);
std::string_view to_string(ProbeTask t);
ProbeMode parse_probe_mode(std::string_view s);  // accepts "frozen" and "full" as short forms
ProbeTask parse_probe_task(std::string_view s);

struct ProbeConfig {
  ProbeMode mode = ProbeMode::frozen_linear_probe;
  ProbeTask task = ProbeTask::binary;
  std::string label;  // empty selects the record's primary label
  std::size_t epochs = 100;
  double lr = 1e-2;
  std::size_t batch_size = 64;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ProbeResult {
  std::string metric;  // "roc_auc", "rmse" or "accuracy"
  double value = 0.0;
  double train_value = 0.0;
  ParamStore head;     // probe.head.{w,b}
  ParamStore encoder;  // gin.* after training; identical to the input in frozen mode
  std::vector<std::size_t> test_indices;
};

// Label of `record` selected by `name`; throws DomainError when absent.
double record_label(const MoleculeRecord& record, const std::string& name);

// Graph representations h_x of the unmasked 2D graphs, [N x d].
Tensor encode_2d(const ParamStore& params, const GinConfig& config,
                 const std::vector<MoleculeRecord>& records, std::size_t batch_size = 256);

// Trains a linear head on a seeded 80/20 split and evaluates it on the held-out part.
ProbeResult finetune_probe(const ParamStore& params, const ModelConfig& model,
                           const std::vector<MoleculeRecord>& records, const ProbeConfig& config);

// Linear probe on precomputed features. Features are standardised with training-split
// statistics. Exposed for tests that supply embeddings directly.
ProbeResult linear_probe(const Tensor& features, const std::vector<double>& labels,
                         const ProbeConfig& config);

}  // namespace gmvp
