#include "tdl/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <new>
#include <stdexcept>
#include <vector>

namespace tdl::fft {
namespace {

struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.r2c);
      fftw_destroy_plan(p.c2r);
    }
  }

  const PlanPair& get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    const int len = static_cast<int>(n);
    double* real = fftw_alloc_real(n);
    fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
    PlanPair p;
    // Planned on SIMD-aligned storage; execute() routes misaligned arrays through scratch.
    p.r2c = fftw_plan_dft_r2c_1d(len, real, spec, FFTW_ESTIMATE);
    p.c2r = fftw_plan_dft_c2r_1d(len, spec, real, FFTW_ESTIMATE);
    fftw_free(real);
    fftw_free(spec);
    if (!p.r2c || !p.c2r) throw std::runtime_error("fftw planning failed");
    return plans_.emplace(n, p).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

// Grow-only fftw_malloc buffer, one per thread and role.
class Scratch {
 public:
  ~Scratch() { fftw_free(data_); }
  void* get(std::size_t bytes) {
    if (bytes > size_) {
      fftw_free(data_);
      data_ = fftw_malloc(bytes);
      if (!data_) throw std::bad_alloc();
      size_ = bytes;
    }
    return data_;
  }

 private:
  void* data_ = nullptr;
  std::size_t size_ = 0;
};

bool aligned(const void* p) { return fftw_alignment_of(static_cast<double*>(const_cast<void*>(p))) == 0; }

}  // namespace

void forward(std::span<const double> in, std::span<Complex> out) {
  if (out.size() != in.size() / 2 + 1) throw std::invalid_argument("fft::forward: bad output size");
  const auto& plan = cache().get(in.size());
  thread_local Scratch in_buf, out_buf;
  // Out-of-place r2c preserves its input; the cast only satisfies the C API.
  auto* src = const_cast<double*>(in.data());
  if (!aligned(src)) {
    src = static_cast<double*>(in_buf.get(in.size_bytes()));
    std::copy(in.begin(), in.end(), src);
  }
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  const bool direct = aligned(dst);
  if (!direct) dst = static_cast<fftw_complex*>(out_buf.get(out.size_bytes()));
  fftw_execute_dft_r2c(plan.r2c, src, dst);
  if (!direct) std::copy_n(reinterpret_cast<Complex*>(dst), out.size(), out.begin());
}

void inverse(std::span<const Complex> in, std::span<double> out) {
  if (in.size() != out.size() / 2 + 1) throw std::invalid_argument("fft::inverse: bad input size");
  const auto& plan = cache().get(out.size());
  thread_local Scratch in_buf, out_buf;
  // c2r destroys its input, so it always runs on a copy.
  auto* src = static_cast<Complex*>(in_buf.get(in.size_bytes()));
  std::copy(in.begin(), in.end(), src);
  double* dst = out.data();
  const bool direct = aligned(dst);
  if (!direct) dst = static_cast<double*>(out_buf.get(out.size_bytes()));
  fftw_execute_dft_c2r(plan.c2r, reinterpret_cast<fftw_complex*>(src), dst);
  if (!direct) std::copy_n(dst, out.size(), out.begin());
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::size_t next_fast_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2u, 3u, 5u})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

std::size_t next_plan_size(std::size_t n) {
  if (n <= 8) return std::max<std::size_t>(n, 1);
  for (std::size_t scale = 1;; scale <<= 1)
    for (std::size_t m : {8u, 9u, 10u, 12u, 15u})
      if (m * scale >= n) return m * scale;
}

}  // namespace tdl::fft
