#pragma once

#include <cstdint>
#include <random>

namespace tdl {

// Deterministic generator used by every stochastic component.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard *distributions* are implementation-defined, so the
// uniform and Gaussian draws are derived here explicitly:
//   uniform(): top 53 bits of one engine output, scaled to [0, 1)
//   normal():  Marsaglia-Tsang ziggurat (128 layers) on 32-bit words, each
//              engine output split high half first; exponential tail
//              sampling beyond 3.4426
// This keeps simulated corpora bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

 private:
  std::uint32_t next32();

  std::mt19937_64 engine_;
  std::uint32_t half_ = 0;
  bool has_half_ = false;
};

// SplitMix64 mixing; derives independent child seeds from (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tdl
