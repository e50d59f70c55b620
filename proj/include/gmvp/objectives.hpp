#pragma once

// Self-supervised objectives between the 2D and 3D views: contrastive (InfoNCE,
// EBM-NCE), generative (VRR and its deterministic ablation RR), the 2D-only
// auxiliary losses, their weighted combination, and the InfoNCE MI estimate.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmvp/autodiff.hpp"
#include "gmvp/encoders.hpp"
#include "gmvp/param_store.hpp"
#include "gmvp/rng.hpp"

namespace gmvp {

enum class ContrastiveKind { infonce, ebm_nce, none };
enum class GenerativeKind { vrr, rr, none };
// plain: contrastive + generative. G adds AttrMask on the 2D view; C adds a 2D-2D
// contrastive term between two independently masked 2D views.
enum class Variant { plain, G, C };

std::string_view to_string(ContrastiveKind k);
std::string_view to_string(GenerativeKind k);
std::string_view to_string(Variant v);
ContrastiveKind parse_contrastive_kind(std::string_view s);
GenerativeKind parse_generative_kind(std::string_view s);
Variant parse_variant(std::string_view s);

struct LossConfig {
  ContrastiveKind contrastive = ContrastiveKind::ebm_nce;
  GenerativeKind generative = GenerativeKind::vrr;
  double alpha1 = 1.0;  // contrastive weight
  double alpha2 = 1.0;  // generative weight
  double alpha3 = 1.0;  // 2D-only SSL weight (variants G and C)
  double beta = 1.0;    // KL weight inside VRR
  Variant variant = Variant::plain;

  void validate() const;
};

// Row i of hx is paired with row i of hy.
struct BatchReprs {
  Var hx;
  Var hy;

  std::size_t size() const { return hx.value().rows(); }
};

// In-batch negatives: one derangement per draw, so anchor i never meets itself.
class NegativeSampler {
 public:
  explicit NegativeSampler(Rng& rng) : rng_(&rng) {}
  std::vector<std::size_t> draw(std::size_t batch_size) { return rng_->derangement(batch_size); }

 private:
  Rng* rng_;
};

double score(std::span<const double> hx, std::span<const double> hy);
// Inner product of two [1 x d] (or [d]) representations, as a scalar Var.
Var score(Var hx, Var hy);

// Symmetric InfoNCE with all K-1 in-batch negatives per anchor. Requires K >= 2.
Var infonce(const BatchReprs& batch);
// x-anchored half: mean_i [logsumexp_j <hx_i, hy_j> - <hx_i, hy_i>].
Var infonce_one_sided(const BatchReprs& batch);

// Self-normalised EBM-NCE with one negative per anchor in each direction.
// neg_x[i] is the 2D row scored against hy_i; neg_y[i] the 3D row scored against hx_i.
Var ebm_nce(const BatchReprs& batch, std::span<const std::size_t> neg_x,
            std::span<const std::size_t> neg_y);
Var ebm_nce(const BatchReprs& batch, NegativeSampler& sampler);

// Row-wise KL(N(mu, diag sigma^2) || N(0, I)) as a [rows x 1] column.
Var kl_diag_gaussian(Var mu, Var sigma);

struct VrrTerms {
  Var loss;
  Var recon_x;  // mean ||q_x(z_x) - SG(h_y)||^2
  Var recon_y;  // mean ||q_y(z_y) - SG(h_x)||^2
  Var kl_x;     // mean KL for the 2D side
  Var kl_y;
};

VrrTerms vrr(Tape& tape, const ParamStore& store, const BatchReprs& batch, const HeadSet& heads,
             double beta, Rng& rng);
VrrTerms vrr(Tape& tape, const ParamStore& store, const BatchReprs& batch, const HeadSet& heads,
             double beta, Tensor eps_x, Tensor eps_y);

// VRR with no noise and no KL term.
Var rr(Tape& tape, const ParamStore& store, const BatchReprs& batch, const HeadSet& heads);

// Mean cross-entropy of the masked atoms' atomic numbers predicted from their node
// representations by the linear classifier at `classifier`.
Var attr_mask_2d(Tape& tape, const ParamStore& store, Var node_reprs,
                 std::span<const std::size_t> masked_nodes,
                 std::span<const std::size_t> true_atomic_numbers,
                 const std::string& classifier = kAttrMaskHead);

// InfoNCE between two independently masked 2D views of the same molecules.
Var contrastive_2d(Var hx_a, Var hx_b);

// Extra inputs needed by the G and C variants.
struct AuxInputs {
  std::optional<Var> node_reprs;                 // G: node representations of the masked 2D view
  std::vector<std::size_t> masked_nodes;         // G: global node indices
  std::vector<std::size_t> true_atomic_numbers;  // G: targets, one per masked node
  std::optional<Var> hx_second_view;             // C: graph reprs of a second masked 2D view
};

struct LossBreakdown {
  Var total;
  std::map<std::string, double> terms;  // unweighted per-term values
};

LossBreakdown combined_loss(Tape& tape, const ParamStore& store, const BatchReprs& batch,
                            const HeadSet& heads, const LossConfig& config, const AuxInputs& aux,
                            Rng& rng);

// log K - infonce_one_sided, in nats. Never exceeds log K.
double mi_estimate_infonce(const BatchReprs& batch);

}  // namespace gmvp
