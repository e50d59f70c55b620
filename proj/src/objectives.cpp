#include "gmvp/objectives.hpp"

#include <cmath>
#include <numeric>

#include "gmvp/errors.hpp"

namespace gmvp {

std::string_view to_string(ContrastiveKind k) {
  switch (k) {
    case ContrastiveKind::infonce: return "infonce";
    case ContrastiveKind::ebm_nce: return "ebm_nce";
    case ContrastiveKind::none: return "none";
  }
  return "?";
}

std::string_view to_string(GenerativeKind k) {
  switch (k) {
    case GenerativeKind::vrr: return "vrr";
    case GenerativeKind::rr: return "rr";
    case GenerativeKind::none: return "none";
  }
  return "?";
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::plain: return "plain";
    case Variant::G: return "G";
    case Variant::C: return "C";
  }
  return "?";
}

ContrastiveKind parse_contrastive_kind(std::string_view s) {
  if (s == "infonce") return ContrastiveKind::infonce;
  if (s == "ebm_nce") return ContrastiveKind::ebm_nce;
  if (s == "none") return ContrastiveKind::none;
  throw ConfigError("unknown contrastive kind '" + std::string(s) + "'");
}

GenerativeKind parse_generative_kind(std::string_view s) {
  if (s == "vrr") return GenerativeKind::vrr;
  if (s == "rr") return GenerativeKind::rr;
  if (s == "none") return GenerativeKind::none;
  throw ConfigError("unknown generative kind '" + std::string(s) + "'");
}

Variant parse_variant(std::string_view s) {
  if (s == "plain") return Variant::plain;
  if (s == "G") return Variant::G;
  if (s == "C") return Variant::C;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

void LossConfig::validate() const {
  for (double w : {alpha1, alpha2, alpha3, beta}) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("loss weights must be finite and >= 0");
  }
  if (contrastive == ContrastiveKind::none && generative == GenerativeKind::none &&
      variant == Variant::plain) {
    throw ConfigError("loss config enables no objective");
  }
}

double score(std::span<const double> hx, std::span<const double> hy) {
  if (hx.size() != hy.size()) throw ShapeError("score: representation sizes differ");
  return std::inner_product(hx.begin(), hx.end(), hy.begin(), 0.0);
}

Var score(Var hx, Var hy) { return sum(hx * hy); }

namespace {

void require_pairs(const BatchReprs& batch, const char* what) {
  const Tensor& hx = batch.hx.value();
  const Tensor& hy = batch.hy.value();
  if (hx.rank() != 2 || hy.rank() != 2 || hx.shape() != hy.shape()) {
    throw ShapeError(std::string(what) + ": representation batches must share shape [K x d], got " +
                     shape_string(hx.shape()) + " and " + shape_string(hy.shape()));
  }
  if (hx.rows() < 2) {
    throw ShapeError(std::string(what) + " needs a batch of K >= 2 pairs, got K=" +
                     std::to_string(hx.rows()));
  }
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// mean_i [logsumexp_j S_ij - S_ii] over a square score matrix.
Var anchored_softmax_ce(Var scores) {
  const auto diag = iota(scores.value().rows());
  return mean(logsumexp(scores, Axis::cols) - pick_columns(scores, diag));
}

}  // namespace

Var infonce_one_sided(const BatchReprs& batch) {
  require_pairs(batch, "infonce");
  return anchored_softmax_ce(matmul(batch.hx, transpose(batch.hy)));
}

Var infonce(const BatchReprs& batch) {
  require_pairs(batch, "infonce");
  Var s = matmul(batch.hx, transpose(batch.hy));  // s_ij = <hx_i, hy_j>
  return scale(anchored_softmax_ce(s) + anchored_softmax_ce(transpose(s)), 0.5);
}

Var ebm_nce(const BatchReprs& batch, std::span<const std::size_t> neg_x,
            std::span<const std::size_t> neg_y) {
  require_pairs(batch, "ebm_nce");
  const std::size_t K = batch.size();
  if (neg_x.size() != K || neg_y.size() != K) throw ShapeError("ebm_nce: one negative per anchor");
  Var s = matmul(batch.hx, transpose(batch.hy));
  Var st = transpose(s);
  const auto diag = iota(K);
  Var pos = pick_columns(s, diag);
  // log sigma(t) = -softplus(-t); log(1 - sigma(t)) = -softplus(t)
  Var neg_for_y = pick_columns(st, neg_x);  // <hx_{neg_x[i]}, hy_i>
  Var neg_for_x = pick_columns(s, neg_y);   // <hx_i, hy_{neg_y[i]}>
  Var y_anchored = mean(softplus(neg_for_y) + softplus(-pos));
  Var x_anchored = mean(softplus(neg_for_x) + softplus(-pos));
  return scale(y_anchored + x_anchored, 0.5);
}

Var ebm_nce(const BatchReprs& batch, NegativeSampler& sampler) {
  require_pairs(batch, "ebm_nce");
  const auto neg_x = sampler.draw(batch.size());
  const auto neg_y = sampler.draw(batch.size());
  return ebm_nce(batch, neg_x, neg_y);
}

Var kl_diag_gaussian(Var mu, Var sigma) {
  for (double s : sigma.value().data()) {
    if (!(s > 0.0)) throw DomainError("kl_diag_gaussian: sigma must be positive");
  }
  if (mu.shape() != sigma.shape()) throw ShapeError("kl_diag_gaussian: mu/sigma shape mismatch");
  // 1/2 sum(mu^2 + sigma^2 - 1) - sum(log sigma)
  Var quad = scale(add_scalar(square(mu) + square(sigma), -1.0), 0.5);
  Var terms = quad - log(sigma);
  if (terms.value().rank() == 2) return sum(terms, Axis::cols);
  return sum(terms);
}

namespace {

Var mean_sq_distance(Var a, Var b) {
  const double rows = static_cast<double>(a.value().rows());
  return scale(sum(square(a - b)), 1.0 / rows);
}

void check_heads(const BatchReprs& batch, const HeadSet& heads) {
  const Tensor& hx = batch.hx.value();
  if (hx.rank() != 2 || hx.shape() != batch.hy.value().shape()) {
    throw ShapeError("reconstruction: representation batches must share shape [K x d]");
  }
  if (hx.cols() != heads.repr_dim) {
    throw ShapeError("reconstruction heads expect width " + std::to_string(heads.repr_dim) +
                     ", got " + std::to_string(hx.cols()));
  }
}

}  // namespace

VrrTerms vrr(Tape& tape, const ParamStore& store, const BatchReprs& batch, const HeadSet& heads,
             double beta, Tensor eps_x, Tensor eps_y) {
  check_heads(batch, heads);
  LatentSample zx =
      reparameterize(tape, store, batch.hx, heads.mu_x, heads.sigma_x, std::move(eps_x));
  LatentSample zy =
      reparameterize(tape, store, batch.hy, heads.mu_y, heads.sigma_y, std::move(eps_y));
  VrrTerms t;
  t.recon_x = mean_sq_distance(project(tape, store, heads.q_x, zx.z), stop_gradient(batch.hy));
  t.recon_y = mean_sq_distance(project(tape, store, heads.q_y, zy.z), stop_gradient(batch.hx));
  t.kl_x = mean(kl_diag_gaussian(zx.mu, zx.sigma));
  t.kl_y = mean(kl_diag_gaussian(zy.mu, zy.sigma));
  t.loss = scale(t.recon_x + t.recon_y, 0.5) + scale(t.kl_x + t.kl_y, 0.5 * beta);
  return t;
}

VrrTerms vrr(Tape& tape, const ParamStore& store, const BatchReprs& batch, const HeadSet& heads,
             double beta, Rng& rng) {
  check_heads(batch, heads);
  const std::size_t K = batch.size(), L = heads.latent_dim;
  Tensor eps_x({K, L}), eps_y({K, L});
  for (double& e : eps_x.data()) e = rng.normal();
  for (double& e : eps_y.data()) e = rng.normal();
  return vrr(tape, store, batch, heads, beta, std::move(eps_x), std::move(eps_y));
}

Var rr(Tape& tape, const ParamStore& store, const BatchReprs& batch, const HeadSet& heads) {
  check_heads(batch, heads);
  Var mu_x = mlp2(tape, store, heads.mu_x, batch.hx);
  Var mu_y = mlp2(tape, store, heads.mu_y, batch.hy);
  Var recon_x = mean_sq_distance(project(tape, store, heads.q_x, mu_x), stop_gradient(batch.hy));
  Var recon_y = mean_sq_distance(project(tape, store, heads.q_y, mu_y), stop_gradient(batch.hx));
  return scale(recon_x + recon_y, 0.5);
}

Var attr_mask_2d(Tape& tape, const ParamStore& store, Var node_reprs,
                 std::span<const std::size_t> masked_nodes,
                 std::span<const std::size_t> true_atomic_numbers, const std::string& classifier) {
  if (masked_nodes.empty()) throw ShapeError("attr_mask_2d: no masked atoms");
  if (masked_nodes.size() != true_atomic_numbers.size()) {
    throw ShapeError("attr_mask_2d: one target per masked atom required");
  }
  Var logits = linear(tape, store, classifier, gather_rows(node_reprs, masked_nodes));
  return mean(logsumexp(logits, Axis::cols) - pick_columns(logits, true_atomic_numbers));
}

Var contrastive_2d(Var hx_a, Var hx_b) { return infonce(BatchReprs{hx_a, hx_b}); }

LossBreakdown combined_loss(Tape& tape, const ParamStore& store, const BatchReprs& batch,
                            const HeadSet& heads, const LossConfig& config, const AuxInputs& aux,
                            Rng& rng) {
  std::optional<Var> total;
  LossBreakdown out;
  auto accumulate = [&](const std::string& name, Var term, double weight) {
    out.terms[name] = term.value().item();
    Var weighted = scale(term, weight);
    total = total ? *total + weighted : weighted;
  };

  switch (config.contrastive) {
    case ContrastiveKind::infonce: accumulate("infonce", infonce(batch), config.alpha1); break;
    case ContrastiveKind::ebm_nce: {
      NegativeSampler sampler(rng);
      accumulate("ebm_nce", ebm_nce(batch, sampler), config.alpha1);
      break;
    }
    case ContrastiveKind::none: break;
  }
  switch (config.generative) {
    case GenerativeKind::vrr: {
      VrrTerms t = vrr(tape, store, batch, heads, config.beta, rng);
      out.terms["vrr_recon"] = 0.5 * (t.recon_x.value().item() + t.recon_y.value().item());
      out.terms["vrr_kl"] = 0.5 * (t.kl_x.value().item() + t.kl_y.value().item());
      accumulate("vrr", t.loss, config.alpha2);
      break;
    }
    case GenerativeKind::rr: accumulate("rr", rr(tape, store, batch, heads), config.alpha2); break;
    case GenerativeKind::none: break;
  }
  switch (config.variant) {
    case Variant::G:
      if (!aux.node_reprs) throw ConfigError("variant G needs masked-view node representations");
      accumulate("attr_mask",
                 attr_mask_2d(tape, store, *aux.node_reprs, aux.masked_nodes,
                              aux.true_atomic_numbers),
                 config.alpha3);
      break;
    case Variant::C:
      if (!aux.hx_second_view) throw ConfigError("variant C needs a second masked 2D view");
      accumulate("contrastive_2d", contrastive_2d(batch.hx, *aux.hx_second_view), config.alpha3);
      break;
    case Variant::plain: break;
  }
  out.total = total ? *total : tape.constant(Tensor::scalar(0.0));
  return out;
}

double mi_estimate_infonce(const BatchReprs& batch) {
  const double K = static_cast<double>(batch.size());
  return std::log(K) - infonce_one_sided(batch).value().item();
}

}  // namespace gmvp
