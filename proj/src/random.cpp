#include "tdl/random.hpp"

#include <array>
#include <cmath>

namespace tdl {
namespace {

// Marsaglia-Tsang ziggurat tables for the standard normal, 128 layers.
struct Ziggurat {
  std::array<std::uint32_t, 128> k{};
  std::array<double, 128> w{};
  std::array<double, 128> f{};

  Ziggurat() {
    constexpr double m = 2147483648.0;
    constexpr double v = 9.91256303526217e-3;
    double d = 3.442619855899, t = d;
    const double q = v / std::exp(-0.5 * d * d);
    k[0] = static_cast<std::uint32_t>((d / q) * m);
    k[1] = 0;
    w[0] = q / m;
    w[127] = d / m;
    f[0] = 1.0;
    f[127] = std::exp(-0.5 * d * d);
    for (int i = 126; i >= 1; --i) {
      d = std::sqrt(-2.0 * std::log(v / d + std::exp(-0.5 * d * d)));
      k[static_cast<std::size_t>(i) + 1] = static_cast<std::uint32_t>((d / t) * m);
      t = d;
      f[static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d);
      w[static_cast<std::size_t>(i)] = d / m;
    }
  }
};

const Ziggurat& tables() {
  static const Ziggurat z;
  return z;
}

constexpr double kTail = 3.442619855899;

}  // namespace

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint32_t Rng::next32() {
  if (has_half_) {
    has_half_ = false;
    return half_;
  }
  const std::uint64_t bits = engine_();
  half_ = static_cast<std::uint32_t>(bits);
  has_half_ = true;
  return static_cast<std::uint32_t>(bits >> 32);
}

double Rng::normal() {
  const auto& z = tables();
  for (;;) {
    // One 32-bit word: sign and magnitude, with the low 7 bits picking the layer.
    const auto hz = static_cast<std::int32_t>(next32());
    const auto iz = static_cast<std::size_t>(hz & 127);
    const auto mag = static_cast<std::uint32_t>(hz < 0 ? -static_cast<std::int64_t>(hz) : hz);
    const double x = hz * z.w[iz];
    if (mag < z.k[iz]) return x;
    if (iz == 0) {
      double tx, ty;
      do {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        while (u2 <= 0.0) u2 = uniform();
        tx = -std::log(u1) / kTail;
        ty = -std::log(u2);
      } while (ty + ty < tx * tx);
      return hz > 0 ? kTail + tx : -kTail - tx;
    }
    if (z.f[iz] + uniform() * (z.f[iz - 1] - z.f[iz]) < std::exp(-0.5 * x * x)) return x;
  }
}

std::int64_t Rng::integer(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  return lo + static_cast<std::int64_t>(static_cast<std::uint64_t>(uniform() * static_cast<double>(span)) % span);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace tdl
