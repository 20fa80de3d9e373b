#pragma once

#include <complex>
#include <cstddef>
#include <span>

// Thin FFTW wrapper. Plans are created once per length (FFTW_ESTIMATE,
// SIMD-aligned, out-of-place) under a lock and then executed concurrently
// through the new-array interface. Misaligned caller arrays are staged
// through per-thread aligned scratch, so results never depend on alignment.
namespace tdl::fft {

using Complex = std::complex<double>;

// out.size() must be in.size() / 2 + 1.
void forward(std::span<const double> in, std::span<Complex> out);

// Unnormalized inverse: out[t] = sum_k X[k] e^{+2 pi i k t / n}. in is not modified.
void inverse(std::span<const Complex> in, std::span<double> out);

std::size_t next_pow2(std::size_t n);
// Smallest 2^a 3^b 5^c >= n.
std::size_t next_fast_size(std::size_t n);
// Smallest m * 2^k >= n with m in {8, 9, 10, 12, 15}: five lengths per octave,
// so workloads with many different signal lengths reuse a handful of plans.
std::size_t next_plan_size(std::size_t n);

}  // namespace tdl::fft
