#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdl/kernels.hpp"

namespace tdl::kernels {

std::size_t frame_count(std::size_t length, std::size_t frame, std::size_t hop) {
  if (length < frame || hop == 0) return 0;
  return (length - frame) / hop + 1;
}

void phase_shift_block(std::span<const Complex> spectrum, double step, double gain, std::size_t block,
                       std::span<Complex> out) {
  const std::size_t begin = block * kPhaseBlock;
  const std::size_t end = std::min(spectrum.size(), begin + kPhaseBlock);
  const double c = std::cos(step), s = std::sin(step);
  const double phase = step * static_cast<double>(begin);
  double re = gain * std::cos(phase), im = gain * std::sin(phase);
  for (std::size_t k = begin; k < end; ++k) {
    const double a = spectrum[k].real(), b = spectrum[k].imag();
    out[k] = Complex(a * re - b * im, a * im + b * re);
    const double next_re = re * c - im * s;
    im = re * s + im * c;
    re = next_re;
  }
}

namespace serial {

void lagged_products(std::span<const double> a, std::span<const double> b, int max_lag,
                     std::span<double> out) {
  const auto na = static_cast<long>(a.size());
  const auto nb = static_cast<long>(b.size());
  for (int d = -max_lag; d <= max_lag; ++d) {
    const long lo = std::max(0L, -static_cast<long>(d));
    const long hi = std::min(na, nb - d);
    double acc = 0.0;
    for (long i = lo; i < hi; ++i) acc += a[i] * b[i + d];
    out[d + max_lag] = acc;
  }
}

void phat_weight(std::span<Complex> cross, double relative_floor) {
  double peak = 0.0;
  for (const auto& c : cross) peak = std::max(peak, std::sqrt(std::norm(c)));
  const double floor = relative_floor * peak;
  for (auto& c : cross) {
    const double mag = std::sqrt(std::norm(c));
    c = (mag > floor && mag > 0.0) ? Complex(c.real() / mag, c.imag() / mag) : Complex{};
  }
}

void phase_shift(std::span<const Complex> spectrum, double delay, double gain, std::size_t n,
                 std::span<Complex> out) {
  const double step = -2.0 * std::numbers::pi * delay / static_cast<double>(n);
  const std::size_t blocks = (spectrum.size() + kPhaseBlock - 1) / kPhaseBlock;
  for (std::size_t b = 0; b < blocks; ++b) phase_shift_block(spectrum, step, gain, b, out);
}

void frame_energy(std::span<const double> x, std::size_t frame, std::size_t hop,
                  std::span<double> out) {
  const std::size_t frames = frame_count(x.size(), frame, hop);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t i = f * hop; i < f * hop + frame; ++i) acc += x[i] * x[i];
    out[f] = acc / static_cast<double>(frame);
  }
}

}  // namespace serial
}  // namespace tdl::kernels
