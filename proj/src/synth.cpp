#include "gmvp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gmvp/errors.hpp"
#include "gmvp/rng.hpp"

namespace gmvp {

namespace {

constexpr int kCarbon = 6;
constexpr int kNitrogen = 7;
constexpr int kOxygen = 8;
constexpr std::size_t kMaxRingSize = 8;
constexpr double kHeteroatomRate = 0.1;
constexpr double kHingeRate = 0.06;
constexpr double kZigZag = std::numbers::pi / 6.0;  // 30 degrees either side of the heading

struct Skeleton {
  Molecule2D graph;
  std::vector<Vec3> coords;
};

Vec3 step(const Vec3& from, double angle) {
  return {from[0] + kBondLength * std::cos(angle), from[1] + kBondLength * std::sin(angle), from[2]};
}

// Zig-zag backbone in the xy plane. Atoms flagged as hinges turn the heading by 180
// degrees over the next two bonds, folding the chain back onto itself.
std::vector<Vec3> backbone(std::size_t n, const std::vector<bool>& hinge) {
  std::vector<Vec3> pos;
  pos.reserve(n);
  pos.push_back({0.0, 0.0, 0.0});
  double heading = 0.0;
  int turning = 0;
  for (std::size_t i = 1; i < n; ++i) {
    double angle;
    if (turning > 0) {
      heading += std::numbers::pi / 2.0;
      angle = heading;
      --turning;
    } else {
      angle = heading + ((i % 2 == 1) ? kZigZag : -kZigZag);
    }
    pos.push_back(step(pos.back(), angle));
    if (hinge[i]) turning = 2;
  }
  return pos;
}

void add_bond(Molecule2D& g, std::size_t i, std::size_t j, BondType t = BondType::single) {
  g.bonds.push_back(Bond{std::min(i, j), std::max(i, j), t});
}

// Carbon-rich backbone with heteroatom substitutions. Nitrogen is reserved for hinges.
int backbone_element(Rng& rng) {
  static constexpr int kHetero[] = {kOxygen, 9, 14, 15, 16, 17, 35};
  if (rng.uniform() >= kHeteroatomRate) return kCarbon;
  return kHetero[rng.uniform_index(std::size(kHetero))];
}

Skeleton make_chain(std::size_t n, Rng& rng) {
  std::vector<bool> hinge(n, false);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    if (!hinge[i - 1] && !hinge[i - 2] && rng.uniform() < kHingeRate) hinge[i] = true;
  }
  Skeleton s;
  s.coords = backbone(n, hinge);
  for (std::size_t i = 0; i < n; ++i) {
    s.graph.atoms.push_back(Atom{hinge[i] ? kNitrogen : backbone_element(rng), 0});
    if (i > 0) add_bond(s.graph, i - 1, i);
  }
  return s;
}

Skeleton make_ring(std::size_t n, Rng& rng) {
  Skeleton s;
  s.coords = ring_layout(n);
  const BondType t = n == 6 ? BondType::aromatic : BondType::single;
  for (std::size_t i = 0; i < n; ++i) {
    s.graph.atoms.push_back(Atom{backbone_element(rng), 0});
    add_bond(s.graph, i, (i + 1) % n, t);
  }
  return s;
}

// Backbone with straight side chains leaving the plane along +z or -z.
Skeleton make_branched(std::size_t n, Rng& rng) {
  const std::size_t main = std::max<std::size_t>(3, n - n / 3);
  Skeleton s = make_chain(main, rng);
  std::size_t remaining = n - main;
  while (remaining > 0) {
    const std::size_t anchor = 1 + rng.uniform_index(main - 2);
    const std::size_t len = std::min(remaining, 1 + rng.uniform_index(4));
    const double dir = rng.uniform() < 0.5 ? 1.0 : -1.0;
    std::size_t prev = anchor;
    for (std::size_t k = 0; k < len; ++k) {
      const Vec3& p = s.coords[prev];
      s.coords.push_back({p[0], p[1], p[2] + dir * kBondLength});
      s.graph.atoms.push_back(Atom{backbone_element(rng), 0});
      add_bond(s.graph, prev, s.coords.size() - 1);
      prev = s.coords.size() - 1;
    }
    remaining -= len;
  }
  return s;
}

void assign_tags(Molecule2D& g) {
  std::vector<int> degree(g.atoms.size(), 0);
  for (const Bond& b : g.bonds) {
    ++degree[b.i];
    ++degree[b.j];
  }
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    g.atoms[i].tag = std::min(degree[i], kNumTags - 1);
  }
}

}  // namespace

std::string_view to_string(SynthKind k) {
  switch (k) {
    case SynthKind::chain: return "chain";
    case SynthKind::ring: return "ring";
    case SynthKind::branched: return "branched";
    case SynthKind::mixed: return "mixed";
  }
  return "";
}

SynthKind parse_synth_kind(std::string_view s) {
  if (s == "chain") return SynthKind::chain;
  if (s == "ring") return SynthKind::ring;
  if (s == "branched") return SynthKind::branched;
  if (s == "mixed") return SynthKind::mixed;
  throw ConfigError("unknown synthetic kind '" + std::string(s) + "'");
}

void SynthSpec::validate() const {
  if (count == 0) throw ConfigError("synth count must be >= 1");
  if (min_atoms < 3 || max_atoms < min_atoms) {
    throw ConfigError("synth atom range must satisfy 3 <= min_atoms <= max_atoms");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synth noise must be >= 0");
}

std::size_t diameter_class(double diameter, const std::vector<double>& edges) {
  std::size_t c = 0;
  for (double e : edges) c += diameter >= e;
  return c;
}

bool has_long_range_contact(const Molecule2D& graph, const Conformer& conformer) {
  const auto hops = hop_distances(graph);
  const std::size_t n = graph.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (hops[i][j] >= kContactMinHops &&
          distance(conformer.coords[i], conformer.coords[j]) <= kContactMaxDistance) {
        return true;
      }
    }
  }
  return false;
}

std::vector<Vec3> chain_layout(std::size_t n) { return backbone(n, std::vector<bool>(n, false)); }

std::vector<Vec3> ring_layout(std::size_t n, double bond_length) {
  const double radius = bond_length / (2.0 * std::sin(std::numbers::pi / static_cast<double>(n)));
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    out.push_back({radius * std::cos(a), radius * std::sin(a), 0.0});
  }
  return out;
}

Dataset gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng base(spec.seed);
  Dataset ds;
  ds.records.reserve(spec.count);
  std::vector<double> diameters;
  for (std::size_t r = 0; r < spec.count; ++r) {
    Rng rng = base.fork(r);
    SynthKind kind = spec.kind;
    if (kind == SynthKind::mixed) {
      static constexpr SynthKind kinds[] = {SynthKind::chain, SynthKind::chain, SynthKind::ring,
                                            SynthKind::branched};
      kind = kinds[rng.uniform_index(4)];
    }
    std::size_t lo = spec.min_atoms, hi = spec.max_atoms;
    if (kind == SynthKind::ring && lo <= kMaxRingSize) hi = std::min(hi, kMaxRingSize);
    const std::size_t n = lo + rng.uniform_index(hi - lo + 1);
    Skeleton s = kind == SynthKind::chain  ? make_chain(n, rng)
                 : kind == SynthKind::ring ? make_ring(n, rng)
                                           : make_branched(n, rng);
    assign_tags(s.graph);

    MoleculeRecord rec;
    rec.id = std::string(to_string(kind)) + "-" + std::to_string(r);
    rec.graph = std::move(s.graph);
    const std::size_t conformers = 1 + rng.uniform_index(3);
    std::vector<double> logits(conformers);
    double top = -INFINITY;
    for (double& l : logits) top = std::max(top, l = rng.normal());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - top);
    for (std::size_t c = 0; c < conformers; ++c) {
      Conformer conf;
      conf.weight = std::exp(logits[c] - top) / z;
      for (const Vec3& p : s.coords) {
        conf.coords.push_back({p[0] + spec.noise * rng.normal(), p[1] + spec.noise * rng.normal(),
                               p[2] + spec.noise * rng.normal()});
      }
      rec.conformers.push_back(std::move(conf));
    }
    std::stable_sort(rec.conformers.begin(), rec.conformers.end(),
                     [](const Conformer& a, const Conformer& b) { return a.weight > b.weight; });
    const double diameter = spatial_diameter(rec.conformers.front());
    rec.labels["diameter"] = diameter;
    rec.labels["contact"] = has_long_range_contact(rec.graph, rec.conformers.front()) ? 1.0 : 0.0;
    diameters.push_back(diameter);
    ds.records.push_back(std::move(rec));
  }

  std::vector<double> sorted = diameters;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (std::size_t q = 1; q < kDiameterClasses; ++q) {
    edges.push_back(sorted[q * sorted.size() / kDiameterClasses]);
  }
  for (std::size_t r = 0; r < ds.records.size(); ++r) {
    const double cls = static_cast<double>(diameter_class(diameters[r], edges));
    ds.records[r].label = cls;
    ds.records[r].labels["diameter_class"] = cls;
  }
  ds.header = nlohmann::json{{"generator", "synthetic"},
                             {"kind", std::string(to_string(spec.kind))},
                             {"count", spec.count},
                             {"min_atoms", spec.min_atoms},
                             {"max_atoms", spec.max_atoms},
                             {"noise", spec.noise},
                             {"seed", spec.seed},
                             {"diameter_edges", edges}};
  return ds;
}

}  // namespace gmvp
