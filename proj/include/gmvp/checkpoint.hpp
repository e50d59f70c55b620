#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gmvp/adam.hpp"
#include "gmvp/config.hpp"
#include "gmvp/param_store.hpp"
#include "gmvp/rng.hpp"

namespace gmvp {

// Everything needed to resume pre-training exactly: configuration, parameters,
// optimiser moments, the base generator state and the number of completed steps.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t version = kFormatVersion;
  TrainConfig config;
  ParamStore params;
  AdamState adam;
  Rng::State rng_state{};
  std::uint64_t step = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Binary layout: "GMVP" magic, u32 version, then tagged length-prefixed sections
// (CONF json, PARM, ADAM, RNGS, STEP), then a CRC-32 of all preceding bytes.
// Integers and doubles are little-endian.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
// Throws FormatError on truncation, checksum failure, bad magic or version mismatch.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gmvp
