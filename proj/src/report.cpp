#include "gmvp/report.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>

#include "gmvp/errors.hpp"

namespace gmvp {

void EvalReport::finalize() {
  value = per_seed.empty() ? 0.0
                           : std::accumulate(per_seed.begin(), per_seed.end(), 0.0) /
                                 static_cast<double>(per_seed.size());
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json seeds_json = nlohmann::json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    seeds_json.push_back({{"seed", seeds[i]}, {"value", i < per_seed.size() ? per_seed[i] : 0.0}});
  }
  nlohmann::json j{{"task", task},
                   {"metric", metric},
                   {"value", value},
                   {"seeds", seeds_json},
                   {"config_digest", config_digest}};
  if (!extra.empty()) j["details"] = extra;
  return j;
}

void EvalReport::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write report '" + path.string() + "'");
  out << to_json().dump(2) << '\n';
}

std::string config_digest(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gmvp
