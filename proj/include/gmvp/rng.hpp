#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace gmvp {

// xoshiro256** generator seeded through splitmix64. Every draw is defined here
// (no std:: distributions) so streams are identical across standard libraries.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;
  static constexpr std::string_view kAlgorithm = "xoshiro256**";

  explicit Rng(std::uint64_t seed = 0);

  static Rng from_state(const State& state);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer on [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  // Standard normal via Box-Muller; no cached spare so the state alone determines the stream.
  double normal();

  // Independent child stream identified by `stream`. Does not advance this generator.
  Rng fork(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Identity permutation of [0, n) shuffled with Fisher-Yates.
  std::vector<std::size_t> permutation(std::size_t n);

  // Uniformly random permutation of [0, n) without fixed points (n >= 2), by rejection.
  std::vector<std::size_t> derangement(std::size_t n);

  const State& state() const { return s_; }
  void set_state(const State& state) { s_ = state; }

  friend bool operator==(const Rng& a, const Rng& b) { return a.s_ == b.s_; }

 private:
  State s_{};
};

std::uint64_t splitmix64(std::uint64_t& x);

}  // namespace gmvp
