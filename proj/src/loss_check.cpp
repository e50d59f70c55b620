#include "gmvp/loss_check.hpp"

#include <string>

#include "gmvp/encoders.hpp"
#include "gmvp/errors.hpp"
#include "gmvp/graph_batch.hpp"
#include "gmvp/molio.hpp"
#include "gmvp/synth.hpp"

namespace gmvp {

const std::vector<std::string_view>& checkable_losses() {
  static const std::vector<std::string_view> names{"infonce", "ebm_nce", "vrr",
                                                   "rr",      "attr_mask", "combined"};
  return names;
}

GradCheckResult check_loss_gradients(std::string_view loss, Variant variant, std::uint64_t seed,
                                     const LossCheckOptions& options) {
  bool known = false;
  for (auto n : checkable_losses()) known |= n == loss;
  if (!known) throw ConfigError("unknown loss '" + std::string(loss) + "'");

  SynthSpec spec;
  spec.count = options.batch;
  spec.min_atoms = 4;
  spec.max_atoms = 7;
  spec.seed = seed;
  const Dataset data = gen_synthetic(spec);

  ModelConfig model;
  model.gin.num_layers = model.schnet.num_layers = options.num_layers;
  model.gin.hidden_dim = model.schnet.hidden_dim = options.hidden_dim;
  model.validate();
  Rng rng = Rng(seed).fork(7);
  const ParamStore params = init_model(model, rng);
  const HeadSet heads = model.heads();

  // Views, negatives and noise are drawn once so every evaluation sees the same batch.
  std::vector<Molecule2D> views2d, second2d;
  std::vector<View3D> views3d;
  std::vector<std::size_t> masked, truth;
  std::size_t base = 0;
  for (const auto& rec : data.records) {
    const Conformer conf = center_coords(rec.conformers.front());
    ViewPair v = mask_views(rec, 0.3, conf, rng);
    for (std::size_t m : v.masked_indices) {
      masked.push_back(base + m);
      truth.push_back(static_cast<std::size_t>(rec.graph.atoms[m].atomic_number));
    }
    second2d.push_back(mask_views(rec, 0.3, conf, rng).view2d);
    base += rec.graph.size();
    views2d.push_back(std::move(v.view2d));
    views3d.push_back(std::move(v.view3d));
  }
  const GraphBatch g1 = GraphBatch::build(views2d);
  const GraphBatch g2 = GraphBatch::build(second2d);
  const GeometryBatch g3 = GeometryBatch::build(views3d, model.schnet);
  const std::size_t k = options.batch;
  const std::vector<std::size_t> neg_x = rng.derangement(k), neg_y = rng.derangement(k);
  Tensor eps_x({k, heads.latent_dim}), eps_y({k, heads.latent_dim});
  for (double& e : eps_x.data()) e = rng.normal();
  for (double& e : eps_y.data()) e = rng.normal();
  const Rng pinned = rng.fork(1);

  LossConfig combined;
  combined.variant = variant;
  combined.validate();
  const std::string name(loss);

  ScalarObjective f = [&](Tape& tape, const ParamStore& p) -> Var {
    const GinOutput gx = gin_forward(tape, p, model.gin, g1);
    const BatchReprs batch{gx.graph_reprs, schnet_forward(tape, p, model.schnet, g3)};
    if (name == "infonce") return infonce(batch);
    if (name == "ebm_nce") return ebm_nce(batch, neg_x, neg_y);
    if (name == "vrr") return vrr(tape, p, batch, heads, 1.0, eps_x, eps_y).loss;
    if (name == "rr") return rr(tape, p, batch, heads);
    if (name == "attr_mask") return attr_mask_2d(tape, p, gx.node_reprs, masked, truth);
    AuxInputs aux;
    if (variant == Variant::G) {
      aux.node_reprs = gx.node_reprs;
      aux.masked_nodes = masked;
      aux.true_atomic_numbers = truth;
    }
    if (variant == Variant::C) aux.hx_second_view = gin_forward(tape, p, model.gin, g2).graph_reprs;
    Rng draws = pinned;
    return combined_loss(tape, p, batch, heads, combined, aux, draws).total;
  };
  return grad_check(f, params, options.eps);
}

}  // namespace gmvp
