#pragma once

#include <array>
#include <cstdint>

namespace vdfd::diff {

// xoshiro256++ with fully serializable state. All randomness in the project
// flows through this type so that (config, seed) pins every run bitwise.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n), n >= 1.
  int uniform_int(int n);
  // Standard normal via Box-Muller (no cached spare, so state stays 4 words).
  double normal();
  double normal(double mean, double stddev);

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace vdfd::diff
