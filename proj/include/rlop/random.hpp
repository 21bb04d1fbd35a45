#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace rlop {

// Seeded random stream. Normal draws use Box-Muller on raw engine output so
// the whole stream state is the engine state (serializable, platform-stable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal();

  // Independent child stream, seeded from this stream through splitmix64.
  Rng split();

  std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace rlop
