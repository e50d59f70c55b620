#include "gmvp/molio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gmvp/errors.hpp"

namespace gmvp {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view what, const ParseOptions& options) {
  if (!obj.is_object()) throw ParseError(std::string(what) + " must be a JSON object");
  if (options.lenient) return;
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError("unknown key '" + key + "' in " + std::string(what));
    }
  }
}

const json& require(const json& obj, const char* key, std::string_view what) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string(what) + " is missing '" + key + "'");
  return *it;
}

int to_int(const json& v, std::string_view what) {
  if (!v.is_number_integer()) throw ParseError(std::string(what) + " must be an integer");
  return v.get<int>();
}

std::size_t to_index(const json& v, std::string_view what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(std::string(what) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double to_double(const json& v, std::string_view what) {
  if (!v.is_number()) throw ParseError(std::string(what) + " must be a number");
  return v.get<double>();
}

}  // namespace

MoleculeRecord record_from_json(const json& j, const ParseOptions& options) {
  check_keys(j, {"id", "atoms", "bonds", "conformers", "label", "labels"}, "record", options);
  MoleculeRecord rec;
  const json& id = require(j, "id", "record");
  if (!id.is_string()) throw ParseError("record id must be a string");
  rec.id = id.get<std::string>();
  const std::string ctx = "record '" + rec.id + "'";

  const json& atoms = require(j, "atoms", ctx);
  if (!atoms.is_array()) throw ParseError(ctx + ": atoms must be an array");
  for (const json& a : atoms) {
    check_keys(a, {"z", "tag"}, ctx + " atom", options);
    Atom atom;
    atom.atomic_number = to_int(require(a, "z", ctx + " atom"), ctx + " atom z");
    atom.tag = a.contains("tag") ? to_int(a["tag"], ctx + " atom tag") : 0;
    rec.graph.atoms.push_back(atom);
  }

  if (j.contains("bonds")) {
    const json& bonds = j["bonds"];
    if (!bonds.is_array()) throw ParseError(ctx + ": bonds must be an array");
    for (const json& b : bonds) {
      check_keys(b, {"i", "j", "type"}, ctx + " bond", options);
      Bond bond;
      bond.i = to_index(require(b, "i", ctx + " bond"), ctx + " bond i");
      bond.j = to_index(require(b, "j", ctx + " bond"), ctx + " bond j");
      if (bond.i == bond.j) {
        throw ParseError(ctx + ": self bond on atom " + std::to_string(bond.i));
      }
      if (bond.i > bond.j) std::swap(bond.i, bond.j);
      const json& type = require(b, "type", ctx + " bond");
      if (!type.is_string()) throw ParseError(ctx + ": bond type must be a string");
      try {
        bond.type = parse_bond_type(type.get<std::string>());
      } catch (const ParseError& e) {
        throw ParseError(ctx + ": " + e.what());
      }
      rec.graph.bonds.push_back(bond);
    }
  }

  const json& confs = require(j, "conformers", ctx);
  if (!confs.is_array()) throw ParseError(ctx + ": conformers must be an array");
  for (const json& c : confs) {
    check_keys(c, {"coords", "weight"}, ctx + " conformer", options);
    Conformer conf;
    conf.weight = c.contains("weight") ? to_double(c["weight"], ctx + " conformer weight") : 1.0;
    const json& coords = require(c, "coords", ctx + " conformer");
    if (!coords.is_array()) throw ParseError(ctx + ": coords must be an array");
    for (const json& row : coords) {
      if (!row.is_array() || row.size() != 3) {
        throw ParseError(ctx + ": every coordinate row must have 3 numbers");
      }
      conf.coords.push_back({to_double(row[0], ctx + " coord"), to_double(row[1], ctx + " coord"),
                             to_double(row[2], ctx + " coord")});
    }
    rec.conformers.push_back(std::move(conf));
  }
  std::stable_sort(rec.conformers.begin(), rec.conformers.end(),
                   [](const Conformer& a, const Conformer& b) { return a.weight > b.weight; });

  if (j.contains("label") && !j["label"].is_null()) {
    rec.label = to_double(j["label"], ctx + " label");
  }
  if (j.contains("labels")) {
    const json& labels = j["labels"];
    if (!labels.is_object()) throw ParseError(ctx + ": labels must be an object");
    for (const auto& item : labels.items()) {
      rec.labels[item.key()] = to_double(item.value(), ctx + " label '" + item.key() + "'");
    }
  }
  rec.validate();
  return rec;
}

json record_to_json(const MoleculeRecord& rec) {
  json j;
  j["id"] = rec.id;
  json atoms = json::array();
  for (const Atom& a : rec.graph.atoms) atoms.push_back({{"z", a.atomic_number}, {"tag", a.tag}});
  j["atoms"] = std::move(atoms);
  json bonds = json::array();
  for (const Bond& b : rec.graph.bonds) {
    bonds.push_back({{"i", b.i}, {"j", b.j}, {"type", std::string(bond_type_name(b.type))}});
  }
  j["bonds"] = std::move(bonds);
  json confs = json::array();
  for (const Conformer& c : rec.conformers) {
    json coords = json::array();
    for (const Vec3& p : c.coords) coords.push_back({p[0], p[1], p[2]});
    confs.push_back({{"coords", std::move(coords)}, {"weight", c.weight}});
  }
  j["conformers"] = std::move(confs);
  if (rec.label) j["label"] = *rec.label;
  if (!rec.labels.empty()) j["labels"] = rec.labels;
  return j;
}

Dataset read_dataset(std::istream& in, const ParseOptions& options) {
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    try {
      if (j.is_object() && j.contains("gmvp_header")) {
        if (!first) throw ParseError("header object is only allowed on the first line");
        ds.header = j["gmvp_header"];
      } else {
        ds.records.push_back(record_from_json(j, options));
      }
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    first = false;
  }
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in, options);
}

std::vector<MoleculeRecord> parse_jsonl(const std::filesystem::path& path,
                                        const ParseOptions& options) {
  return read_dataset(path, options).records;
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  if (!ds.header.is_null()) out << json{{"gmvp_header", ds.header}}.dump() << '\n';
  for (const MoleculeRecord& r : ds.records) out << record_to_json(r).dump() << '\n';
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write dataset '" + path.string() + "'");
  write_dataset(out, ds);
}

std::size_t masked_count(double ratio, std::size_t n) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("masking ratio must lie in [0, 1]");
  const double nd = static_cast<double>(n);
  // Absorb representation error such as 0.15 * 20 = 3.0000000000000004.
  const double k = std::ceil(ratio * nd - 1e-9);
  return static_cast<std::size_t>(std::clamp(k, 0.0, nd));
}

ViewPair mask_views(const MoleculeRecord& record, double ratio, const Conformer& conformer,
                    Rng& rng) {
  const std::size_t n = record.graph.size();
  const std::size_t k = masked_count(ratio, n);

  // Partial Fisher-Yates: the first k slots form a uniform sample without replacement.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(order[i], order[j]);
  }
  ViewPair views;
  views.masked_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(views.masked_indices.begin(), views.masked_indices.end());

  views.view2d = record.graph;
  views.view3d.atoms = record.graph.atoms;
  views.view3d.conformer = conformer;
  std::vector<char> masked(n, 0);
  for (std::size_t i : views.masked_indices) {
    masked[i] = 1;
    views.view2d.atoms[i].atomic_number = kMaskAtomicNumber;
    views.view2d.atoms[i].tag = kMaskTag;
    views.view3d.atoms[i].atomic_number = kMaskAtomicNumber;
  }
  for (Bond& b : views.view2d.bonds) {
    if (masked[b.i] || masked[b.j]) b.type = BondType::mask;
  }
  return views;
}

const Conformer& select_conformer(const MoleculeRecord& record, std::size_t count, Rng& rng) {
  if (count == 0) throw DomainError("conformer count C must be at least 1");
  if (record.conformers.empty()) throw DomainError("record '" + record.id + "' has no conformers");
  const std::size_t pool = std::min(count, record.conformers.size());
  return record.conformers[pool == 1 ? 0 : rng.uniform_index(pool)];
}

Conformer center_coords(const Conformer& conformer) {
  Conformer out = conformer;
  if (out.coords.empty()) return out;
  Vec3 c{0.0, 0.0, 0.0};
  for (const Vec3& p : out.coords)
    for (int d = 0; d < 3; ++d) c[d] += p[d];
  for (double& x : c) x /= static_cast<double>(out.coords.size());
  for (Vec3& p : out.coords)
    for (int d = 0; d < 3; ++d) p[d] -= c[d];
  return out;
}

}  // namespace gmvp
