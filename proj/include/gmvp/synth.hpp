#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "gmvp/molecule.hpp"
#include "gmvp/molio.hpp"

namespace gmvp {

enum class SynthKind { chain, ring, branched, mixed };

std::string_view to_string(SynthKind k);
SynthKind parse_synth_kind(std::string_view s);

struct SynthSpec {
  SynthKind kind = SynthKind::mixed;
  std::size_t count = 1000;
  std::size_t min_atoms = 6;
  std::size_t max_atoms = 24;
  double noise = 0.1;  // Angstrom, per coordinate
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kBondLength = 1.5;          // Angstrom
inline constexpr std::size_t kContactMinHops = 4;
inline constexpr double kContactMaxDistance = 2.5;  // Angstrom
inline constexpr std::size_t kDiameterClasses = 4;

// Labels derived from a record's highest-weight conformer.
std::size_t diameter_class(double diameter, const std::vector<double>& edges);
bool has_long_range_contact(const Molecule2D& graph, const Conformer& conformer);

// Noiseless layouts, exposed for geometry tests.
std::vector<Vec3> chain_layout(std::size_t n);
std::vector<Vec3> ring_layout(std::size_t n, double bond_length = kBondLength);

// Deterministic synthetic dataset. Each record carries `label` (the diameter class) and
// `labels` {"diameter_class", "contact", "diameter"}. The header stores the bucket edges
// under "diameter_edges".
Dataset gen_synthetic(const SynthSpec& spec);

}  // namespace gmvp
