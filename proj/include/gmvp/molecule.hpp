#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gmvp {

// Atomic numbers run 1..118; 0 is the reserved mask token.
inline constexpr int kMaskAtomicNumber = 0;
inline constexpr int kMaxAtomicNumber = 118;
// Tags are 0..kNumTags-1; kNumTags itself is the tag mask token.
inline constexpr int kNumTags = 8;
inline constexpr int kMaskTag = kNumTags;

enum class BondType : std::uint8_t { single = 0, double_ = 1, triple = 2, aromatic = 3, mask = 4 };
inline constexpr std::size_t kNumBondTypes = 5;  // including mask

std::string_view bond_type_name(BondType t);
// Throws ParseError for anything other than single/double/triple/aromatic.
BondType parse_bond_type(std::string_view name);

struct Atom {
  int atomic_number = 6;
  int tag = 0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// Undirected bond stored once with i < j.
struct Bond {
  std::size_t i = 0;
  std::size_t j = 0;
  BondType type = BondType::single;

  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Molecule2D {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  std::size_t size() const { return atoms.size(); }
  // Throws ParseError naming `context` if any invariant is violated.
  void validate(std::string_view context = {}) const;
  // Neighbour lists, built from the bond list.
  std::vector<std::vector<std::size_t>> adjacency() const;

  friend bool operator==(const Molecule2D&, const Molecule2D&) = default;
};

using Vec3 = std::array<double, 3>;

struct Conformer {
  std::vector<Vec3> coords;  // Angstrom, one row per atom
  double weight = 1.0;

  friend bool operator==(const Conformer&, const Conformer&) = default;
};

struct MoleculeRecord {
  std::string id;
  Molecule2D graph;
  std::vector<Conformer> conformers;  // descending weight
  std::optional<double> label;
  // Auxiliary named labels (the synthetic generator stores several per record).
  std::map<std::string, double> labels;

  void validate() const;

  friend bool operator==(const MoleculeRecord&, const MoleculeRecord&) = default;
};

// 3D view: atom identities (masked where applicable) plus one conformer.
struct View3D {
  std::vector<Atom> atoms;
  Conformer conformer;

  friend bool operator==(const View3D&, const View3D&) = default;
};

struct ViewPair {
  Molecule2D view2d;
  View3D view3d;
  std::vector<std::size_t> masked_indices;  // sorted, shared by both views
};

double distance(const Vec3& a, const Vec3& b);

// Longest shortest path (edges) over connected pairs; 0 for a single atom.
std::size_t graph_diameter(const Molecule2D& mol);
// All-pairs hop distances; unreachable pairs are SIZE_MAX.
std::vector<std::vector<std::size_t>> hop_distances(const Molecule2D& mol);
// Largest pairwise Euclidean distance.
double spatial_diameter(const Conformer& conf);

}  // namespace gmvp
