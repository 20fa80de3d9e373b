// Serial reference loops against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <vector>

#include "tdl/kernels.hpp"
#include "tdl/random.hpp"

namespace k = tdl::kernels;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  tdl::Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

std::vector<k::Complex> spectrum(std::size_t n, std::uint64_t seed) {
  tdl::Rng rng(seed);
  std::vector<k::Complex> x(n);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  return x;
}

template <auto Fn>
void lagged(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise(n, 1), b = noise(n, 2);
  const int max_lag = 93;
  std::vector<double> out(2 * max_lag + 1);
  for (auto _ : state) {
    Fn(a, b, max_lag, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * (2 * max_lag + 1));
}

template <auto Fn>
void phat(benchmark::State& state) {
  const auto source = spectrum(static_cast<std::size_t>(state.range(0)), 3);
  auto work = source;
  for (auto _ : state) {
    state.PauseTiming();
    work = source;
    state.ResumeTiming();
    Fn(work, 1e-12);
    benchmark::DoNotOptimize(work.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void shift(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto source = spectrum(n / 2 + 1, 4);
  std::vector<k::Complex> out(source.size());
  for (auto _ : state) {
    Fn(source, 12.37, 0.8, n, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(source.size()));
}

template <auto Fn>
void energy(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 5);
  const std::size_t frame = 1920, hop = 960;
  std::vector<double> out(k::frame_count(x.size(), frame, hop));
  for (auto _ : state) {
    Fn(x, frame, hop, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(lagged<k::serial::lagged_products>)->Name("lagged_products/serial")->Arg(4096)->Arg(57600);
BENCHMARK(lagged<k::parallel::lagged_products>)->Name("lagged_products/parallel")->Arg(4096)->Arg(57600);
BENCHMARK(phat<k::serial::phat_weight>)->Name("phat_weight/serial")->Arg(1 << 13)->Arg(1 << 17);
BENCHMARK(phat<k::parallel::phat_weight>)->Name("phat_weight/parallel")->Arg(1 << 13)->Arg(1 << 17);
BENCHMARK(shift<k::serial::phase_shift>)->Name("phase_shift/serial")->Arg(1 << 14)->Arg(1 << 19);
BENCHMARK(shift<k::parallel::phase_shift>)->Name("phase_shift/parallel")->Arg(1 << 14)->Arg(1 << 19);
BENCHMARK(energy<k::serial::frame_energy>)->Name("frame_energy/serial")->Arg(192000)->Arg(1920000);
BENCHMARK(energy<k::parallel::frame_energy>)->Name("frame_energy/parallel")->Arg(192000)->Arg(1920000);

BENCHMARK_MAIN();
