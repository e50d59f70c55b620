#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "gmvp/molecule.hpp"
#include "gmvp/rng.hpp"

namespace gmvp {

struct ParseOptions {
  // Accept (and ignore) unknown keys instead of rejecting them.
  bool lenient = false;
};

// A JSONL dataset: an optional header object followed by one record per line.
// The header line has the form {"gmvp_header": {...}} and may only appear first.
struct Dataset {
  nlohmann::json header;  // null when absent
  std::vector<MoleculeRecord> records;
};

Dataset read_dataset(const std::filesystem::path& path, const ParseOptions& options = {});
Dataset read_dataset(std::istream& in, const ParseOptions& options = {});

// Records only; a header line, if present, is skipped.
std::vector<MoleculeRecord> parse_jsonl(const std::filesystem::path& path,
                                        const ParseOptions& options = {});

MoleculeRecord record_from_json(const nlohmann::json& j, const ParseOptions& options = {});
nlohmann::json record_to_json(const MoleculeRecord& record);

// Floats are written in shortest round-trip form, so reading back is bit-exact.
void write_dataset(std::ostream& out, const Dataset& dataset);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

// Number of atoms masked for ratio M over n atoms: ceil(M * n), clamped to [0, n].
std::size_t masked_count(double ratio, std::size_t n);

// Masks the same ceil(M*n) atoms in both views. The 2D view replaces atomic number
// and tag with mask tokens and every incident bond type with `mask`; the 3D view
// masks atomic numbers and keeps coordinates.
ViewPair mask_views(const MoleculeRecord& record, double ratio, const Conformer& conformer,
                    Rng& rng);

// Uniform draw among the top min(C, available) conformers.
const Conformer& select_conformer(const MoleculeRecord& record, std::size_t count, Rng& rng);

// Translates coordinates so their centroid is the origin.
Conformer center_coords(const Conformer& conformer);

}  // namespace gmvp
