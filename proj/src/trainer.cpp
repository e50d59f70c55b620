#include "gmvp/trainer.hpp"

#include <chrono>
#include <fstream>

#include "gmvp/autodiff.hpp"
#include "gmvp/encoders.hpp"
#include "gmvp/errors.hpp"
#include "gmvp/graph_batch.hpp"
#include "gmvp/molio.hpp"
#include "gmvp/objectives.hpp"

namespace gmvp {

namespace {
// Stream identifiers for Rng::fork; high bits keep the families disjoint.
constexpr std::uint64_t kInitStream = 0x1ULL << 60;
constexpr std::uint64_t kEpochStream = 0x2ULL << 60;
constexpr std::uint64_t kStepStream = 0x3ULL << 60;
}  // namespace

void MetricsLog::append(MetricsRecord record) {
  if (!records_.empty() && record.step <= records_.back().step) {
    throw Error("metrics steps must be strictly increasing");
  }
  records_.push_back(std::move(record));
}

std::string MetricsLog::to_json_line(const MetricsRecord& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["loss"] = r.loss;
  j["terms"] = r.terms;
  j["secs"] = r.secs;
  return j.dump();
}

std::string MetricsLog::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) {
    out += to_json_line(r);
    out += '\n';
  }
  return out;
}

void MetricsLog::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write metrics file '" + path.string() + "'");
  out << to_jsonl();
}

std::uint64_t steps_per_epoch(std::size_t n, std::size_t k) {
  if (n == 0 || k == 0) return 0;
  std::uint64_t steps = (n + k - 1) / k;
  if (steps > 1 && n % k == 1) --steps;
  return steps;
}

ParamStore initial_params(const TrainConfig& config) {
  Rng init = Rng(config.seed).fork(kInitStream);
  return init_model(config.model, init);
}

PretrainResult pretrain(const std::vector<MoleculeRecord>& dataset, const TrainConfig& config,
                        const PretrainOptions& options) {
  if (dataset.empty()) throw ConfigError("pretrain: dataset is empty");
  config.validate();
  const bool needs_pairs = config.loss.contrastive != ContrastiveKind::none ||
                           config.loss.variant == Variant::C;
  if (needs_pairs && dataset.size() < 2) {
    throw ShapeError("contrastive objectives need K >= 2 molecules per batch; the dataset has " +
                     std::to_string(dataset.size()));
  }

  PretrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  if (options.resume != nullptr) {
    ckpt = *options.resume;
    if (!(ckpt.config == config)) {
      throw ConfigError("resume checkpoint was written with a different configuration");
    }
  } else {
    ckpt.config = config;
    ckpt.rng_state = Rng(config.seed).state();
    ckpt.params = initial_params(config);
    ckpt.adam.lr = config.lr;
    ckpt.step = 0;
  }

  const Rng base = Rng::from_state(ckpt.rng_state);
  const HeadSet heads = config.model.heads();
  const std::size_t n = dataset.size();
  const std::size_t k = config.batch_size;
  const std::uint64_t per_epoch = steps_per_epoch(n, k);
  std::uint64_t total = per_epoch * config.epochs;
  if (options.stop_after_step) total = std::min(total, *options.stop_after_step);

  std::optional<std::uint64_t> cached_epoch;
  std::vector<std::size_t> order;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::uint64_t step = ckpt.step; step < total; ++step) {
    const std::uint64_t epoch = step / per_epoch;
    const std::uint64_t slot = step % per_epoch;
    if (cached_epoch != epoch) {
      Rng shuffle = base.fork(kEpochStream | epoch);
      order = shuffle.permutation(n);
      cached_epoch = epoch;
    }
    const std::size_t begin = slot * k;
    const std::size_t end = slot + 1 == per_epoch ? n : std::min(n, begin + k);

    Rng rng = base.fork(kStepStream | step);
    std::vector<Molecule2D> views2d, second2d;
    std::vector<View3D> views3d;
    AuxInputs aux;
    std::size_t node_base = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const MoleculeRecord& rec = dataset[order[i]];
      const Conformer centered = center_coords(select_conformer(rec, config.num_conformers, rng));
      ViewPair views = mask_views(rec, config.mask_ratio, centered, rng);
      if (config.loss.variant == Variant::G) {
        for (std::size_t m : views.masked_indices) {
          aux.masked_nodes.push_back(node_base + m);
          aux.true_atomic_numbers.push_back(
              static_cast<std::size_t>(rec.graph.atoms[m].atomic_number));
        }
      }
      if (config.loss.variant == Variant::C) {
        second2d.push_back(mask_views(rec, config.mask_ratio, centered, rng).view2d);
      }
      node_base += rec.graph.size();
      views2d.push_back(std::move(views.view2d));
      views3d.push_back(std::move(views.view3d));
    }

    Tape tape;
    const GinOutput gin =
        gin_forward(tape, ckpt.params, config.model.gin, GraphBatch::build(views2d));
    const Var hy = schnet_forward(tape, ckpt.params, config.model.schnet,
                                  GeometryBatch::build(views3d, config.model.schnet));
    if (config.loss.variant == Variant::G) aux.node_reprs = gin.node_reprs;
    if (config.loss.variant == Variant::C) {
      aux.hx_second_view =
          gin_forward(tape, ckpt.params, config.model.gin, GraphBatch::build(second2d)).graph_reprs;
    }

    MetricsRecord record;
    try {
      LossBreakdown loss =
          combined_loss(tape, ckpt.params, BatchReprs{gin.graph_reprs, hy}, heads, config.loss, aux, rng);
      record.loss = loss.total.value().item();
      record.terms = std::move(loss.terms);
      const auto grads = backward(loss.total, tape, ckpt.params);
      adam_step(ckpt.params, grads, ckpt.adam);
    } catch (const NumericError& e) {
      throw NumericError("pretrain step " + std::to_string(step + 1) + ": " + e.what());
    }
    ckpt.step = step + 1;
    record.step = ckpt.step;
    if (config.record_wall_time) {
      record.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    result.metrics.append(record);
    if (options.on_step) options.on_step(result.metrics.records().back());
  }
  return result;
}

}  // namespace gmvp
