#pragma once

// 2D message-passing encoder (GIN), 3D continuous-filter encoder (SchNet) and the
// MLP heads used by the reconstruction objectives. Parameters live in a ParamStore
// under the prefixes "gin.", "schnet." and "heads.".

#include <cstddef>
#include <string>
#include <vector>

#include "gmvp/autodiff.hpp"
#include "gmvp/graph_batch.hpp"
#include "gmvp/molecule.hpp"
#include "gmvp/param_store.hpp"
#include "gmvp/rng.hpp"

namespace gmvp {

struct GinConfig {
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 32;
  std::size_t atom_vocab = kMaxAtomicNumber + 1;  // index 0 is the mask token
  std::size_t tag_vocab = kNumTags + 1;           // last index is the mask token
  std::size_t bond_vocab = kNumBondTypes;         // last index is the mask token

  void validate() const;
};

struct SchNetConfig {
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 32;
  std::size_t atom_vocab = kMaxAtomicNumber + 1;
  std::size_t rbf_count = 16;
  double cutoff = 8.0;   // Angstrom
  double gamma = 10.0;   // 1 / Angstrom^2

  // rbf_count centres evenly spaced on [0, cutoff].
  std::vector<double> centers() const;
  void validate() const;
};

// Names of the six reconstruction heads plus their widths.
struct HeadSet {
  std::size_t repr_dim = 32;
  std::size_t latent_dim = 16;
  std::string mu_x = "heads.mu_x";
  std::string sigma_x = "heads.sigma_x";
  std::string mu_y = "heads.mu_y";
  std::string sigma_y = "heads.sigma_y";
  std::string q_x = "heads.q_x";
  std::string q_y = "heads.q_y";
};

inline constexpr const char* kAttrMaskHead = "heads.attr_mask";

struct ModelConfig {
  GinConfig gin;
  SchNetConfig schnet;
  std::size_t latent_dim = 0;  // 0 means hidden_dim / 2

  std::size_t latent() const;
  HeadSet heads() const;
  void validate() const;
};

// Two-layer perceptron relu(x W1 + b1) W2 + b2 stored as <prefix>.{w1,b1,w2,b2}.
void init_mlp2(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
               std::size_t out, Rng& rng);
Var mlp2(Tape& tape, const ParamStore& store, const std::string& prefix, Var x);

// Single affine map x W + b stored as <prefix>.{w,b}.
void init_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                 Rng& rng);
Var linear(Tape& tape, const ParamStore& store, const std::string& prefix, Var x);

void init_gin(ParamStore& store, const GinConfig& config, Rng& rng);
void init_schnet(ParamStore& store, const SchNetConfig& config, Rng& rng);
void init_heads(ParamStore& store, const HeadSet& heads, Rng& rng);

// All encoder, head and AttrMask-classifier parameters for `config`.
ParamStore init_model(const ModelConfig& config, Rng& rng);

struct GinOutput {
  Var node_reprs;   // [nodes x d]
  Var graph_reprs;  // [graphs x d], mean of last-layer node representations
};

GinOutput gin_forward(Tape& tape, const ParamStore& store, const GinConfig& config,
                      const GraphBatch& batch);
GinOutput gin_forward(Tape& tape, const ParamStore& store, const GinConfig& config,
                      const Molecule2D& mol);

// Graph representations [graphs x d], sum of atom-wise outputs.
Var schnet_forward(Tape& tape, const ParamStore& store, const SchNetConfig& config,
                   const GeometryBatch& batch);
Var schnet_forward(Tape& tape, const ParamStore& store, const SchNetConfig& config,
                   const std::vector<Atom>& atoms, const Conformer& conformer);

struct LatentSample {
  Var z;
  Var mu;
  Var sigma;
  Tensor epsilon;  // the noise draw, held constant
};

// z = mu(h) + sigma(h) * eps with eps ~ N(0, I) drawn row-major from rng.
LatentSample reparameterize(Tape& tape, const ParamStore& store, Var h,
                            const std::string& mu_head, const std::string& sigma_head, Rng& rng);
// Same with a caller-supplied noise tensor (shape of mu).
LatentSample reparameterize(Tape& tape, const ParamStore& store, Var h,
                            const std::string& mu_head, const std::string& sigma_head,
                            Tensor epsilon);

// q head: latent -> representation space.
Var project(Tape& tape, const ParamStore& store, const std::string& q_head, Var z);

}  // namespace gmvp
