#include "gmvp/graph_batch.hpp"

#include <cmath>

#include "gmvp/encoders.hpp"
#include "gmvp/errors.hpp"

namespace gmvp {

GraphBatch GraphBatch::build(std::span<const Molecule2D* const> graphs) {
  GraphBatch b;
  b.num_graphs = graphs.size();
  b.node_offset.push_back(0);
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const Molecule2D& mol = *graphs[g];
    const std::size_t base = b.num_nodes;
    for (const Atom& a : mol.atoms) {
      if (a.atomic_number < 0 || a.tag < 0) throw IndexError("negative atom feature");
      b.atomic_numbers.push_back(static_cast<std::size_t>(a.atomic_number));
      b.tags.push_back(static_cast<std::size_t>(a.tag));
      b.node_graph.push_back(g);
    }
    for (const Bond& bond : mol.bonds) {
      if (bond.i >= mol.size() || bond.j >= mol.size()) throw IndexError("bond index out of range");
      const auto type = static_cast<std::size_t>(bond.type);
      b.edge_src.push_back(base + bond.j);
      b.edge_dst.push_back(base + bond.i);
      b.edge_type.push_back(type);
      b.edge_src.push_back(base + bond.i);
      b.edge_dst.push_back(base + bond.j);
      b.edge_type.push_back(type);
    }
    b.num_nodes += mol.size();
    b.node_offset.push_back(b.num_nodes);
  }
  b.inv_counts = Tensor({b.num_graphs, 1});
  for (std::size_t g = 0; g < b.num_graphs; ++g) {
    const std::size_t n = b.node_offset[g + 1] - b.node_offset[g];
    if (n == 0) throw ShapeError("graph " + std::to_string(g) + " has no atoms");
    b.inv_counts[g] = 1.0 / static_cast<double>(n);
  }
  return b;
}

GraphBatch GraphBatch::build(std::span<const Molecule2D> graphs) {
  std::vector<const Molecule2D*> ptrs;
  ptrs.reserve(graphs.size());
  for (const Molecule2D& g : graphs) ptrs.push_back(&g);
  return build(std::span<const Molecule2D* const>(ptrs));
}

GeometryBatch GeometryBatch::build(std::span<const View3D* const> views,
                                   const SchNetConfig& config) {
  GeometryBatch b;
  b.num_graphs = views.size();
  const std::vector<double> centers = config.centers();
  const double cutoff = config.cutoff;
  for (std::size_t g = 0; g < views.size(); ++g) {
    const View3D& v = *views[g];
    const auto& coords = v.conformer.coords;
    if (coords.size() != v.atoms.size()) {
      throw ShapeError("3D view has " + std::to_string(coords.size()) + " coordinate rows for " +
                       std::to_string(v.atoms.size()) + " atoms");
    }
    for (const Vec3& p : coords)
      for (double x : p)
        if (!std::isfinite(x)) throw NumericError("non-finite coordinate in 3D view");
    const std::size_t base = b.num_nodes;
    for (const Atom& a : v.atoms) {
      if (a.atomic_number < 0) throw IndexError("negative atomic number");
      b.atomic_numbers.push_back(static_cast<std::size_t>(a.atomic_number));
      b.node_graph.push_back(g);
    }
    for (std::size_t i = 0; i < coords.size(); ++i)
      for (std::size_t j = 0; j < coords.size(); ++j) {
        if (i == j) continue;
        const double d = distance(coords[i], coords[j]);
        if (d > cutoff) continue;
        b.pair_i.push_back(base + i);
        b.pair_j.push_back(base + j);
        b.pair_distance.push_back(d);
      }
    b.num_nodes += v.atoms.size();
  }
  const std::size_t P = b.pair_i.size(), B = centers.size();
  b.rbf = Tensor({P, B});
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t k = 0; k < B; ++k) {
      const double diff = b.pair_distance[p] - centers[k];
      b.rbf[p * B + k] = std::exp(-config.gamma * diff * diff);
    }
  return b;
}

GeometryBatch GeometryBatch::build(std::span<const View3D> views, const SchNetConfig& config) {
  std::vector<const View3D*> ptrs;
  ptrs.reserve(views.size());
  for (const View3D& v : views) ptrs.push_back(&v);
  return build(std::span<const View3D* const>(ptrs), config);
}

}  // namespace gmvp
