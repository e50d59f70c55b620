#include "gmvp/molecule.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <utility>

#include "gmvp/errors.hpp"

namespace gmvp {

std::string_view bond_type_name(BondType t) {
  switch (t) {
    case BondType::single: return "single";
    case BondType::double_: return "double";
    case BondType::triple: return "triple";
    case BondType::aromatic: return "aromatic";
    case BondType::mask: return "mask";
  }
  return "?";
}

BondType parse_bond_type(std::string_view name) {
  if (name == "single") return BondType::single;
  if (name == "double") return BondType::double_;
  if (name == "triple") return BondType::triple;
  if (name == "aromatic") return BondType::aromatic;
  throw ParseError("unknown bond type '" + std::string(name) + "'");
}

namespace {
std::string where(std::string_view context) {
  return context.empty() ? std::string() : " in record '" + std::string(context) + "'";
}
}  // namespace

void Molecule2D::validate(std::string_view context) const {
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const Atom& atom = atoms[a];
    if (atom.atomic_number < kMaskAtomicNumber || atom.atomic_number > kMaxAtomicNumber) {
      throw ParseError("invalid atomic number " + std::to_string(atom.atomic_number) +
                       " for atom " + std::to_string(a) + where(context));
    }
    if (atom.tag < 0 || atom.tag > kMaskTag) {
      throw ParseError("invalid tag " + std::to_string(atom.tag) + " for atom " +
                       std::to_string(a) + where(context));
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Bond& b : bonds) {
    if (b.i >= atoms.size() || b.j >= atoms.size()) {
      throw ParseError("bond (" + std::to_string(b.i) + ", " + std::to_string(b.j) +
                       ") index out of range for " + std::to_string(atoms.size()) + " atoms" +
                       where(context));
    }
    if (b.i >= b.j) {
      throw ParseError("bond (" + std::to_string(b.i) + ", " + std::to_string(b.j) +
                       ") must satisfy i < j" + where(context));
    }
    if (!seen.emplace(b.i, b.j).second) {
      throw ParseError("duplicate bond (" + std::to_string(b.i) + ", " + std::to_string(b.j) +
                       ")" + where(context));
    }
  }
}

std::vector<std::vector<std::size_t>> Molecule2D::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(atoms.size());
  for (const Bond& b : bonds) {
    adj[b.i].push_back(b.j);
    adj[b.j].push_back(b.i);
  }
  return adj;
}

void MoleculeRecord::validate() const {
  graph.validate(id);
  if (graph.atoms.empty()) throw ParseError("record '" + id + "' has no atoms");
  if (conformers.empty()) throw ParseError("record '" + id + "' has no conformers");
  for (std::size_t c = 0; c < conformers.size(); ++c) {
    const Conformer& conf = conformers[c];
    if (conf.coords.size() != graph.size()) {
      throw ParseError("record '" + id + "': conformer " + std::to_string(c) + " has " +
                       std::to_string(conf.coords.size()) + " coordinate rows for " +
                       std::to_string(graph.size()) + " atoms");
    }
    if (!(conf.weight >= 0.0) || !std::isfinite(conf.weight)) {
      throw ParseError("record '" + id + "': conformer " + std::to_string(c) +
                       " has invalid weight");
    }
    for (const Vec3& p : conf.coords)
      for (double x : p)
        if (!std::isfinite(x)) throw ParseError("record '" + id + "': non-finite coordinate");
    if (c > 0 && conf.weight > conformers[c - 1].weight) {
      throw ParseError("record '" + id + "': conformers not sorted by descending weight");
    }
  }
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::vector<std::vector<std::size_t>> hop_distances(const Molecule2D& mol) {
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  const auto adj = mol.adjacency();
  const std::size_t n = mol.size();
  std::vector<std::vector<std::size_t>> dist(n, std::vector<std::size_t>(n, kInf));
  for (std::size_t s = 0; s < n; ++s) {
    std::deque<std::size_t> queue{s};
    dist[s][s] = 0;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v : adj[u]) {
        if (dist[s][v] != kInf) continue;
        dist[s][v] = dist[s][u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::size_t graph_diameter(const Molecule2D& mol) {
  std::size_t best = 0;
  for (const auto& row : hop_distances(mol))
    for (std::size_t d : row)
      if (d != std::numeric_limits<std::size_t>::max()) best = std::max(best, d);
  return best;
}

double spatial_diameter(const Conformer& conf) {
  double best = 0.0;
  for (std::size_t i = 0; i < conf.coords.size(); ++i)
    for (std::size_t j = i + 1; j < conf.coords.size(); ++j)
      best = std::max(best, distance(conf.coords[i], conf.coords[j]));
  return best;
}

}  // namespace gmvp
