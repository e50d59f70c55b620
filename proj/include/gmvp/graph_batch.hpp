#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gmvp/molecule.hpp"
#include "gmvp/tensor.hpp"

namespace gmvp {

struct SchNetConfig;

// Several 2D graphs packed as one disjoint graph. Each undirected bond becomes two
// directed edges (src -> dst).
struct GraphBatch {
  std::size_t num_graphs = 0;
  std::size_t num_nodes = 0;
  std::vector<std::size_t> atomic_numbers;
  std::vector<std::size_t> tags;
  std::vector<std::size_t> edge_src;
  std::vector<std::size_t> edge_dst;
  std::vector<std::size_t> edge_type;
  std::vector<std::size_t> node_graph;   // owning graph of each node
  std::vector<std::size_t> node_offset;  // first node of each graph; size num_graphs + 1
  Tensor inv_counts;                     // [num_graphs x 1], 1 / atom count

  static GraphBatch build(std::span<const Molecule2D> graphs);
  static GraphBatch build(std::span<const Molecule2D* const> graphs);
};

// Several 3D views packed together, with the ordered intra-molecular atom pairs
// (i != j) closer than the cutoff and their radial-basis expansion.
struct GeometryBatch {
  std::size_t num_graphs = 0;
  std::size_t num_nodes = 0;
  std::vector<std::size_t> atomic_numbers;
  std::vector<std::size_t> node_graph;
  std::vector<std::size_t> pair_i;  // receiving atom
  std::vector<std::size_t> pair_j;  // sending atom
  std::vector<double> pair_distance;
  Tensor rbf;  // [pairs x rbf_count], exp(-gamma (d - mu_k)^2)

  static GeometryBatch build(std::span<const View3D> views, const SchNetConfig& config);
  static GeometryBatch build(std::span<const View3D* const> views, const SchNetConfig& config);
};

}  // namespace gmvp
