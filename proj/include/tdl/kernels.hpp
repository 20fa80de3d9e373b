#pragma once

#include <complex>
#include <cstddef>
#include <span>

// Data-parallel inner loops of the toolkit.
//
// Each kernel exists twice: `serial::` is the plain reference loop and
// `parallel::` the OpenMP version. The parallel versions split work across
// independent outputs (lags, bins, frames) and keep each output's own
// accumulation order, so both produce bit-identical results. Library code
// calls `parallel::`; tests compare the two and the benchmark times them.
namespace tdl::kernels {

using Complex = std::complex<double>;

namespace serial {

// out[d + max_lag] = sum over valid i of a[i] * b[i + d], d in [-max_lag, max_lag].
void lagged_products(std::span<const double> a, std::span<const double> b, int max_lag,
                     std::span<double> out);

// In-place unit-modulus weighting; bins whose magnitude is below
// relative_floor * max magnitude are set to zero.
void phat_weight(std::span<Complex> cross, double relative_floor);

// out[k] = spectrum[k] * gain * exp(-2 pi i k delay / n), with n the time-domain length.
void phase_shift(std::span<const Complex> spectrum, double delay, double gain, std::size_t n,
                 std::span<Complex> out);

// Mean-square energy of frames [f * hop, f * hop + frame).
void frame_energy(std::span<const double> x, std::size_t frame, std::size_t hop,
                  std::span<double> out);

}  // namespace serial

namespace parallel {

void lagged_products(std::span<const double> a, std::span<const double> b, int max_lag,
                     std::span<double> out);
void phat_weight(std::span<Complex> cross, double relative_floor);
void phase_shift(std::span<const Complex> spectrum, double delay, double gain, std::size_t n,
                 std::span<Complex> out);
void frame_energy(std::span<const double> x, std::size_t frame, std::size_t hop,
                  std::span<double> out);

}  // namespace parallel

// Shared by both phase_shift versions: the rotation is evaluated exactly at
// the first bin of every block and advanced by complex multiplication inside it.
inline constexpr std::size_t kPhaseBlock = 64;
void phase_shift_block(std::span<const Complex> spectrum, double step, double gain, std::size_t block,
                       std::span<Complex> out);

// Number of frames frame_energy produces for a signal of the given length.
std::size_t frame_count(std::size_t length, std::size_t frame, std::size_t hop);

}  // namespace tdl::kernels
