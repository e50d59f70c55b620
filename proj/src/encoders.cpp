#include "gmvp/encoders.hpp"

#include <cmath>

#include "gmvp/errors.hpp"

namespace gmvp {

void GinConfig::validate() const {
  if (num_layers < 1) throw ConfigError("gin.num_layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("gin.hidden_dim must be >= 1");
  if (atom_vocab < 1 || tag_vocab < 1 || bond_vocab < 1) {
    throw ConfigError("gin vocabularies must be non-empty");
  }
}

std::vector<double> SchNetConfig::centers() const {
  std::vector<double> c(rbf_count);
  for (std::size_t k = 0; k < rbf_count; ++k) {
    c[k] = rbf_count == 1 ? 0.0
                          : cutoff * static_cast<double>(k) / static_cast<double>(rbf_count - 1);
  }
  return c;
}

void SchNetConfig::validate() const {
  if (num_layers < 1) throw ConfigError("schnet.num_layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("schnet.hidden_dim must be >= 1");
  if (rbf_count < 1) throw ConfigError("schnet.rbf_count must be >= 1");
  if (!(gamma > 0.0)) throw ConfigError("schnet.gamma must be > 0");
  if (!(cutoff > 0.0)) throw ConfigError("schnet.cutoff must be > 0");
  if (atom_vocab < 1) throw ConfigError("schnet.atom_vocab must be >= 1");
}

std::size_t ModelConfig::latent() const {
  if (latent_dim != 0) return latent_dim;
  return std::max<std::size_t>(1, gin.hidden_dim / 2);
}

HeadSet ModelConfig::heads() const {
  HeadSet h;
  h.repr_dim = gin.hidden_dim;
  h.latent_dim = latent();
  return h;
}

void ModelConfig::validate() const {
  gin.validate();
  schnet.validate();
  if (gin.hidden_dim != schnet.hidden_dim) {
    throw ConfigError("gin.hidden_dim and schnet.hidden_dim must match (scores are inner products)");
  }
}

void init_mlp2(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
               std::size_t out, Rng& rng) {
  store.add_weight(prefix + ".w1", in, hidden, rng);
  store.add_bias(prefix + ".b1", hidden);
  store.add_weight(prefix + ".w2", hidden, out, rng);
  store.add_bias(prefix + ".b2", out);
}

Var mlp2(Tape& tape, const ParamStore& store, const std::string& prefix, Var x) {
  Var h = relu(matmul(x, tape.param(store, prefix + ".w1")) + tape.param(store, prefix + ".b1"));
  return matmul(h, tape.param(store, prefix + ".w2")) + tape.param(store, prefix + ".b2");
}

void init_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                 Rng& rng) {
  store.add_weight(prefix + ".w", in, out, rng);
  store.add_bias(prefix + ".b", out);
}

Var linear(Tape& tape, const ParamStore& store, const std::string& prefix, Var x) {
  return matmul(x, tape.param(store, prefix + ".w")) + tape.param(store, prefix + ".b");
}

namespace {

// Lookup tables act on one-hot inputs, so their effective fan-in is 1.
void add_embedding(ParamStore& store, const std::string& name, std::size_t vocab, std::size_t dim,
                   Rng& rng) {
  store.add_weight(name, 1, vocab * dim, rng);
  store.at(name) = store.at(name).reshaped({vocab, dim});
}

std::string layer_prefix(const char* model, std::size_t k) {
  return std::string(model) + ".layer" + std::to_string(k);
}

void check_vocab(const std::vector<std::size_t>& ids, std::size_t vocab, const char* what) {
  for (std::size_t id : ids) {
    if (id >= vocab) {
      throw IndexError(std::string(what) + " index " + std::to_string(id) +
                       " outside vocabulary of size " + std::to_string(vocab));
    }
  }
}

}  // namespace

void init_gin(ParamStore& store, const GinConfig& config, Rng& rng) {
  config.validate();
  const std::size_t d = config.hidden_dim;
  add_embedding(store, "gin.embed.atom", config.atom_vocab, d, rng);
  add_embedding(store, "gin.embed.tag", config.tag_vocab, d, rng);
  for (std::size_t k = 0; k < config.num_layers; ++k) {
    const std::string p = layer_prefix("gin", k);
    // MLP_bond on one-hot bond types: the first layer is a lookup table.
    add_embedding(store, p + ".bond.w1", config.bond_vocab, d, rng);
    store.add_bias(p + ".bond.b1", d);
    store.add_weight(p + ".bond.w2", d, d, rng);
    store.add_bias(p + ".bond.b2", d);
    init_mlp2(store, p + ".atom", d, d, d, rng);
  }
}

GinOutput gin_forward(Tape& tape, const ParamStore& store, const GinConfig& config,
                      const GraphBatch& batch) {
  check_vocab(batch.atomic_numbers, config.atom_vocab, "atomic number");
  check_vocab(batch.tags, config.tag_vocab, "tag");
  check_vocab(batch.edge_type, config.bond_vocab, "bond type");

  Var z = gather_rows(tape.param(store, "gin.embed.atom"), batch.atomic_numbers) +
          gather_rows(tape.param(store, "gin.embed.tag"), batch.tags);
  for (std::size_t k = 0; k < config.num_layers; ++k) {
    const std::string p = layer_prefix("gin", k);
    // MLP_bond evaluated once per bond type, then looked up per edge.
    Var bond_hidden = relu(tape.param(store, p + ".bond.w1") + tape.param(store, p + ".bond.b1"));
    Var bond_table =
        matmul(bond_hidden, tape.param(store, p + ".bond.w2")) + tape.param(store, p + ".bond.b2");
    Var messages = gather_rows(z, batch.edge_src) + gather_rows(bond_table, batch.edge_type);
    Var aggregated = scatter_add_rows(messages, batch.edge_dst, batch.num_nodes);
    z = mlp2(tape, store, p + ".atom", z + aggregated);
  }
  Var pooled = scatter_add_rows(z, batch.node_graph, batch.num_graphs);
  Var graph = pooled * tape.constant(batch.inv_counts);
  return {z, graph};
}

GinOutput gin_forward(Tape& tape, const ParamStore& store, const GinConfig& config,
                      const Molecule2D& mol) {
  const Molecule2D* ptr = &mol;
  return gin_forward(tape, store, config,
                     GraphBatch::build(std::span<const Molecule2D* const>(&ptr, 1)));
}

void init_schnet(ParamStore& store, const SchNetConfig& config, Rng& rng) {
  config.validate();
  const std::size_t d = config.hidden_dim;
  add_embedding(store, "schnet.embed.atom", config.atom_vocab, d, rng);
  for (std::size_t t = 0; t < config.num_layers; ++t) {
    const std::string p = layer_prefix("schnet", t);
    store.add_weight(p + ".filter.w", config.rbf_count, d, rng);
    init_mlp2(store, p + ".update", d, d, d, rng);
  }
  init_mlp2(store, "schnet.out", d, d, d, rng);
}

Var schnet_forward(Tape& tape, const ParamStore& store, const SchNetConfig& config,
                   const GeometryBatch& batch) {
  check_vocab(batch.atomic_numbers, config.atom_vocab, "atomic number");
  if (batch.rbf.cols() != config.rbf_count && !batch.pair_i.empty()) {
    throw ShapeError("geometry batch was built for a different rbf_count");
  }
  Var z = gather_rows(tape.param(store, "schnet.embed.atom"), batch.atomic_numbers);
  const bool has_pairs = !batch.pair_i.empty();
  Var rbf = tape.constant(has_pairs ? batch.rbf : Tensor({0, config.rbf_count}));
  for (std::size_t t = 0; t < config.num_layers; ++t) {
    const std::string p = layer_prefix("schnet", t);
    // Filter for pair (i, j): sum_k W[k, :] * exp(-gamma (|r_i - r_j| - mu_k)^2).
    Var filter = matmul(rbf, tape.param(store, p + ".filter.w"));
    Var messages = gather_rows(z, batch.pair_j) * filter;
    Var aggregated = scatter_add_rows(messages, batch.pair_i, batch.num_nodes);
    z = z + mlp2(tape, store, p + ".update", aggregated);
  }
  Var atomwise = mlp2(tape, store, "schnet.out", z);
  return scatter_add_rows(atomwise, batch.node_graph, batch.num_graphs);
}

Var schnet_forward(Tape& tape, const ParamStore& store, const SchNetConfig& config,
                   const std::vector<Atom>& atoms, const Conformer& conformer) {
  const View3D view{atoms, conformer};
  const View3D* ptr = &view;
  return schnet_forward(tape, store, config,
                        GeometryBatch::build(std::span<const View3D* const>(&ptr, 1), config));
}

void init_heads(ParamStore& store, const HeadSet& heads, Rng& rng) {
  const std::size_t d = heads.repr_dim, L = heads.latent_dim;
  init_mlp2(store, heads.mu_x, d, d, L, rng);
  init_mlp2(store, heads.sigma_x, d, d, L, rng);
  init_mlp2(store, heads.mu_y, d, d, L, rng);
  init_mlp2(store, heads.sigma_y, d, d, L, rng);
  init_mlp2(store, heads.q_x, L, d, d, rng);
  init_mlp2(store, heads.q_y, L, d, d, rng);
}

ParamStore init_model(const ModelConfig& config, Rng& rng) {
  config.validate();
  ParamStore store;
  Rng gin_rng = rng.fork(1), schnet_rng = rng.fork(2), head_rng = rng.fork(3),
      cls_rng = rng.fork(4);
  init_gin(store, config.gin, gin_rng);
  init_schnet(store, config.schnet, schnet_rng);
  init_heads(store, config.heads(), head_rng);
  init_linear(store, kAttrMaskHead, config.gin.hidden_dim, config.gin.atom_vocab, cls_rng);
  return store;
}

LatentSample reparameterize(Tape& tape, const ParamStore& store, Var h,
                            const std::string& mu_head, const std::string& sigma_head,
                            Tensor epsilon) {
  LatentSample s;
  s.mu = mlp2(tape, store, mu_head, h);
  s.sigma = softplus(mlp2(tape, store, sigma_head, h));
  if (epsilon.shape() != s.mu.shape()) {
    throw ShapeError("reparameterize: noise shape " + shape_string(epsilon.shape()) +
                     " does not match " + shape_string(s.mu.shape()));
  }
  s.epsilon = std::move(epsilon);
  s.z = s.mu + s.sigma * tape.constant(s.epsilon);
  return s;
}

LatentSample reparameterize(Tape& tape, const ParamStore& store, Var h,
                            const std::string& mu_head, const std::string& sigma_head, Rng& rng) {
  const std::size_t rows = h.value().rows();
  const std::size_t latent = store.at(mu_head + ".b2").cols();
  Tensor eps({rows, latent});
  for (double& e : eps.data()) e = rng.normal();
  return reparameterize(tape, store, h, mu_head, sigma_head, std::move(eps));
}

Var project(Tape& tape, const ParamStore& store, const std::string& q_head, Var z) {
  return mlp2(tape, store, q_head, z);
}

}  // namespace gmvp
