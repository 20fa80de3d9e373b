#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tdl/errors.hpp"
#include "tdl/random.hpp"
#include "tdl/simulator.hpp"
#include "tdl/tdoa.hpp"

using namespace tdl;
using Catch::Matchers::WithinAbs;

namespace {

// Low-pass coloured noise: a broad autocorrelation makes plain CC peaks blunt.
std::vector<double> coloured(std::size_t n, std::uint64_t seed, double pole = 0.9) {
  Rng rng(seed);
  std::vector<double> x(n);
  double state = 0.0;
  for (auto& v : x) v = state = pole * state + rng.normal();
  return x;
}

std::vector<double> white(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

// y[t] = x[t - d], zero-filled.
std::vector<double> shifted(const std::vector<double>& x, int d) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const long src = static_cast<long>(t) - d;
    if (src >= 0 && src < static_cast<long>(x.size())) y[t] = x[static_cast<std::size_t>(src)];
  }
  return y;
}

double peak_to_second(const LagCurve& c) {
  const int peak = c.argmax();
  double second = -1e300;
  for (int d = -c.max_lag + 1; d < c.max_lag; ++d) {
    if (d == peak) continue;
    if (c.at(d) >= c.at(d - 1) && c.at(d) >= c.at(d + 1)) second = std::max(second, c.at(d));
  }
  return c.at(peak) / second;
}

StereoRecording stereo(std::vector<double> top, std::vector<double> bottom, int rate = 192000) {
  double peak = 0.0;
  for (double v : top) peak = std::max(peak, std::abs(v));
  for (double v : bottom) peak = std::max(peak, std::abs(v));
  for (auto& v : top) v /= 1.01 * peak;
  for (auto& v : bottom) v /= 1.01 * peak;
  return {rate, std::move(top), std::move(bottom)};
}

}  // namespace

TEST_CASE("self correlation peaks at zero with value 1") {
  const auto a = white(2000, 1);
  const auto cc = normalized_cross_correlation(a, a, 30);
  CHECK_THAT(cc.at(0), WithinAbs(1.0, 1e-9));
  CHECK(cc.argmax() == 0);
  CHECK(gcc_phat(a, a, 30).argmax() == 0);
}

TEST_CASE("explicit +13 shift is found by both estimators") {
  const auto a = coloured(4096, 2);
  const auto b = shifted(a, 13);
  CHECK(normalized_cross_correlation(a, b, 40).argmax() == 13);
  CHECK(gcc_phat(a, b, 40).argmax() == 13);
}

TEST_CASE("PHAT peak is sharper than plain CC") {
  const auto a = coloured(4096, 3);
  const auto b = shifted(a, 13);
  const auto cc = normalized_cross_correlation(a, b, 40);
  const auto phat = gcc_phat(a, b, 40);
  CHECK(peak_to_second(phat) > peak_to_second(cc));
}

TEST_CASE("PHAT ignores a half-amplitude echo at +50") {
  const auto a = coloured(4096, 4);
  auto b = shifted(a, 13);
  const auto echo = shifted(a, 50);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.5 * echo[i];
  CHECK(gcc_phat(a, b, 60).argmax() == 13);
}

TEST_CASE("zero-variance windows are degenerate") {
  const std::vector<double> flat(1000, 0.3);
  const auto a = white(1000, 5);
  CHECK_THROWS_AS(normalized_cross_correlation(flat, a, 10), DegenerateSignalError);
  CHECK_THROWS_AS(normalized_cross_correlation(a, flat, 10), DegenerateSignalError);
  CHECK_THROWS_AS(gcc_phat(flat, a, 10), DegenerateSignalError);
  CHECK_THROWS_AS(gcc_phat(a, std::vector<double>(1000, 0.0), 10), DegenerateSignalError);
}

TEST_CASE("window preconditions") {
  const auto a = white(100, 6);
  CHECK_THROWS_AS(normalized_cross_correlation(a, a, 100), PreconditionError);
  CHECK_THROWS_AS(gcc_phat({}, a, 3), PreconditionError);
  CHECK_THROWS_AS(gcc_phat(a, a, -1), PreconditionError);
}

TEST_CASE("normalized correlation values lie in [-1, 1]") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const auto a = coloured(500, 100 + t, rng.uniform(0.0, 0.99));
    const auto b = white(500, 200 + t);
    const auto c = normalized_cross_correlation(a, rng.uniform() < 0.5 ? a : b, 60);
    for (double v : c.values) {
      REQUIRE(v <= 1.0 + 1e-9);
      REQUIRE(v >= -1.0 - 1e-9);
    }
  }
}

TEST_CASE("max_lag follows spacing over c plus an 8-sample margin") {
  for (double spacing : {0.05, 0.141, 0.15, 0.153, 0.30})
    for (int rate : {48000, 96000, 192000}) {
      const int expect = static_cast<int>(std::ceil(spacing / 340.0 * rate - 1e-9)) + 8;
      CHECK(max_lag_for(DeviceSpec{spacing, "x"}, rate) == expect);
    }
  CHECK(max_lag_for(DeviceSpec{}, 192000) == 93);
}

TEST_CASE("device spacing bounds") {
  CHECK_THROWS_AS((DeviceSpec{0.04, "x"}.validate()), PreconditionError);
  CHECK_THROWS_AS((DeviceSpec{0.31, "x"}.validate()), PreconditionError);
  CHECK_NOTHROW(galaxy_note3().validate());
  CHECK(galaxy_note5().mic_spacing_m == 0.153);
  CHECK(galaxy_s5().mic_spacing_m == 0.141);
}

TEST_CASE("estimate_tdoa sign convention") {
  const auto s = white(8000, 8);
  const PhonemeSegment seg{"AA", 0, 8000};
  SECTION("identical channels") {
    const auto rec = stereo(s, s);
    for (auto m : {TdoaMethod::GccPhat, TdoaMethod::CrossCorrelation})
      CHECK(estimate_tdoa(rec, seg, m, DeviceSpec{}).delay_samples == 0);
  }
  SECTION("bottom delayed by 27 gives -27") {
    const auto rec = stereo(s, shifted(s, 27));
    for (auto m : {TdoaMethod::GccPhat, TdoaMethod::CrossCorrelation})
      CHECK(estimate_tdoa(rec, seg, m, DeviceSpec{}).delay_samples == -27);
  }
  SECTION("top delayed by 27 gives +27") {
    const auto rec = stereo(shifted(s, 27), s);
    CHECK(estimate_tdoa(rec, seg, TdoaMethod::GccPhat, DeviceSpec{}).delay_samples == 27);
  }
}

TEST_CASE("short segments are rejected") {
  const auto s = white(1000, 9);
  const auto rec = stereo(s, s);
  CHECK_THROWS_AS(estimate_tdoa(rec, {"AA", 0, 185}, TdoaMethod::GccPhat, DeviceSpec{}), SegmentTooShortError);
  CHECK_NOTHROW(estimate_tdoa(rec, {"AA", 0, 186}, TdoaMethod::GccPhat, DeviceSpec{}));
  CHECK_THROWS_AS(estimate_tdoa(rec, {"AA", 500, 1200}, TdoaMethod::GccPhat, DeviceSpec{}), InvalidAlignmentError);
}

TEST_CASE("antisymmetry, gain invariance and the lag bound") {
  Rng rng(10);
  const DeviceSpec dev;
  const int max_lag = max_lag_for(dev, 192000);
  for (int t = 0; t < 40; ++t) {
    const int d = static_cast<int>(rng.integer(-86, 86));
    const auto s = coloured(6000, 300 + t, 0.5);
    const auto top = shifted(s, d);
    const PhonemeSegment seg{"AA", 0, 6000};
    for (auto m : {TdoaMethod::GccPhat, TdoaMethod::CrossCorrelation}) {
      const auto fwd = estimate_tdoa(stereo(top, s), seg, m, dev);
      const auto rev = estimate_tdoa(stereo(s, top), seg, m, dev);
      REQUIRE(fwd.delay_samples == d);
      REQUIRE(rev.delay_samples == -fwd.delay_samples);
      auto louder = top;
      const double g = rng.uniform(0.05, 0.95);
      for (auto& v : louder) v *= g;
      const auto rec = stereo(s, louder);
      REQUIRE(estimate_tdoa(rec, seg, m, dev).delay_samples == rev.delay_samples);
      REQUIRE(std::abs(fwd.delay_samples) <= max_lag);
    }
  }
}

TEST_CASE("noisy pure shifts at 20 dB are recovered exactly") {
  Rng rng(11);
  const DeviceSpec dev;
  int phat_hits = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const int d = static_cast<int>(rng.integer(-86, 86));
    const auto s = white(4096 + 200, 1000 + t);
    std::vector<double> bottom(s.begin() + 100, s.begin() + 100 + 4096);
    std::vector<double> top(4096);
    for (std::size_t i = 0; i < 4096; ++i) top[i] = s[100 + i - static_cast<std::size_t>(d)];
    for (auto& v : bottom) v += 0.1 * rng.normal();
    for (auto& v : top) v += 0.1 * rng.normal();
    const auto m = estimate_tdoa(stereo(top, bottom), {"AA", 0, 4096}, TdoaMethod::GccPhat, dev);
    phat_hits += m.delay_samples == d;
  }
  CHECK(phat_hits >= 198);
}

TEST_CASE("parabolic refinement stays within half a sample of the integer peak") {
  const auto s = coloured(6000, 12, 0.7);
  const auto top = shifted(s, 31);
  const auto m = estimate_tdoa(stereo(top, s), {"AA", 0, 6000}, TdoaMethod::GccPhat, DeviceSpec{});
  CHECK(m.delay_samples == 31);
  CHECK(std::abs(m.refined_delay - 31.0) <= 0.5);
}

TEST_CASE("measure_dynamic keeps segment order") {
  LiveParams p;
  p.labels = {"IY", "S", "M", "AA", "K"};
  p.seed = 21;
  const auto u = synthesize_live(p, VocalSourceModel::default_model());
  const auto dyn = measure_dynamic(u.recording, u.alignment, TdoaMethod::GccPhat, DeviceSpec{});
  REQUIRE(dyn.measurements.size() == 5);
  CHECK(dyn.labels() == p.labels);
  CHECK(dyn.sample_rate == 192000);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(dyn.measurements[i].delay_samples ==
          estimate_tdoa(u.recording, u.alignment[i], TdoaMethod::GccPhat, DeviceSpec{}).delay_samples);
}

TEST_CASE("rendered vowels at the reference pose fall in the vowel band") {
  const auto& inv = PhonemeInventory::english();
  std::vector<std::string> vowels;
  for (const auto& p : inv.symbols())
    if (p.is_vowel()) vowels.emplace_back(p.symbol);
  LiveParams p;
  p.labels = vowels;
  p.seed = 4;
  p.jitter = false;
  const auto u = synthesize_live(p, VocalSourceModel::default_model());
  const auto dyn = measure_dynamic(u.recording, u.alignment, TdoaMethod::GccPhat, DeviceSpec{});
  for (const auto& m : dyn.measurements) {
    INFO(m.label << " " << m.delay_samples);
    CHECK(m.delay_samples >= 46);
    CHECK(m.delay_samples <= 65);
  }
}

TEST_CASE("method names") {
  CHECK(parse_tdoa_method("gcc_phat") == TdoaMethod::GccPhat);
  CHECK(parse_tdoa_method("cc") == TdoaMethod::CrossCorrelation);
  CHECK(to_string(TdoaMethod::GccPhat) == "gcc_phat");
  CHECK_THROWS_AS(parse_tdoa_method("music"), ConfigError);
}

TEST_CASE("PHAT analysis cutoff ignores noise-only bins") {
  // Exact band-limited signal: sinusoids below 0.05 cycles/sample, delayed by 13.4 samples.
  const std::size_t n = 8192;
  const double delay = 13.4;
  double err_full = 0.0, err_cut = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(7000 + s);
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (int k = 0; k < 60; ++k) {
      const double f = rng.uniform(0.002, 0.05), ph = rng.uniform(0.0, 6.283185307179586);
      for (std::size_t t = 0; t < n; ++t) {
        a[t] += std::sin(6.283185307179586 * f * static_cast<double>(t) + ph);
        b[t] += std::sin(6.283185307179586 * f * (static_cast<double>(t) - delay) + ph);
      }
    }
    for (std::size_t t = 0; t < n; ++t) {
      a[t] += 0.5 * rng.normal();
      b[t] += 0.5 * rng.normal();
    }
    err_full += std::abs(gcc_phat(a, b, 40).refined_argmax() - delay);
    err_cut += std::abs(gcc_phat(a, b, 40, 0.06).refined_argmax() - delay);
  }
  INFO("mean error full band " << err_full / 20 << ", cut " << err_cut / 20);
  CHECK(err_cut < 0.5 * err_full);
  const auto w = white(2048, 1);
  CHECK(gcc_phat(w, shifted(w, 3), 20, 0.5).values == gcc_phat(w, shifted(w, 3), 20).values);
  CHECK(kPhatAnalysisHz / 192000.0 < 0.5);
}
