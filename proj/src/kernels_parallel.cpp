#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdl/kernels.hpp"

namespace tdl::kernels::parallel {

void lagged_products(std::span<const double> a, std::span<const double> b, int max_lag,
                     std::span<double> out) {
  const auto na = static_cast<long>(a.size());
  const auto nb = static_cast<long>(b.size());
#pragma omp parallel for schedule(static)
  for (int d = -max_lag; d <= max_lag; ++d) {
    const long lo = std::max(0L, -static_cast<long>(d));
    const long hi = std::min(na, nb - d);
    double acc = 0.0;
    for (long i = lo; i < hi; ++i) acc += a[i] * b[i + d];
    out[d + max_lag] = acc;
  }
}

void phat_weight(std::span<Complex> cross, double relative_floor) {
  const auto n = static_cast<long>(cross.size());
  double peak = 0.0;
#pragma omp parallel for reduction(max : peak) schedule(static)
  for (long k = 0; k < n; ++k) peak = std::max(peak, std::sqrt(std::norm(cross[k])));
  const double floor = relative_floor * peak;
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) {
    const double mag = std::sqrt(std::norm(cross[k]));
    cross[k] = (mag > floor && mag > 0.0) ? Complex(cross[k].real() / mag, cross[k].imag() / mag) : Complex{};
  }
}

void phase_shift(std::span<const Complex> spectrum, double delay, double gain, std::size_t n,
                 std::span<Complex> out) {
  const double step = -2.0 * std::numbers::pi * delay / static_cast<double>(n);
  const auto blocks = static_cast<long>((spectrum.size() + kPhaseBlock - 1) / kPhaseBlock);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < blocks; ++b) phase_shift_block(spectrum, step, gain, static_cast<std::size_t>(b), out);
}

void frame_energy(std::span<const double> x, std::size_t frame, std::size_t hop,
                  std::span<double> out) {
  const auto frames = static_cast<long>(frame_count(x.size(), frame, hop));
#pragma omp parallel for schedule(static)
  for (long f = 0; f < frames; ++f) {
    double acc = 0.0;
    const std::size_t begin = static_cast<std::size_t>(f) * hop;
    for (std::size_t i = begin; i < begin + frame; ++i) acc += x[i] * x[i];
    out[f] = acc / static_cast<double>(frame);
  }
}

}  // namespace tdl::kernels::parallel
