#include "tdl/tdoa.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "tdl/errors.hpp"
#include "tdl/fft.hpp"
#include "tdl/kernels.hpp"

namespace tdl {
namespace {

std::vector<double> centered(std::span<const double> x, double* energy) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> out(x.size());
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] - mean;
    e += out[i] * out[i];
  }
  *energy = e;
  return out;
}

void check_windows(std::span<const double> a, std::span<const double> b, int max_lag) {
  if (a.empty() || b.empty()) throw PreconditionError("correlation window is empty");
  if (max_lag < 0) throw PreconditionError("max_lag must be non-negative");
  if (static_cast<std::size_t>(max_lag) >= std::min(a.size(), b.size()))
    throw PreconditionError("max_lag must be smaller than the window length");
}

void check_energy(double energy, std::size_t n) {
  // Relative to the sample count so that very quiet but genuine signals pass.
  if (!(energy > 1e-24 * static_cast<double>(n))) throw DegenerateSignalError("window has zero variance");
}

}  // namespace

void DeviceSpec::validate() const {
  if (!(mic_spacing_m >= 0.05 && mic_spacing_m <= 0.30))
    throw PreconditionError("mic spacing must lie in [0.05, 0.30] m");
}

DeviceSpec galaxy_note3() { return {0.151, "note3"}; }
DeviceSpec galaxy_note5() { return {0.153, "note5"}; }
DeviceSpec galaxy_s5() { return {0.141, "s5"}; }

std::string_view to_string(TdoaMethod m) noexcept {
  return m == TdoaMethod::CrossCorrelation ? "cc" : "gcc_phat";
}

TdoaMethod parse_tdoa_method(std::string_view name) {
  if (name == "cc" || name == "CC") return TdoaMethod::CrossCorrelation;
  if (name == "gcc_phat" || name == "GCC_PHAT" || name == "phat") return TdoaMethod::GccPhat;
  throw ConfigError("unknown TDoA method '" + std::string(name) + "'");
}

std::vector<double> TdoaDynamic::delays() const {
  std::vector<double> out;
  out.reserve(measurements.size());
  for (const auto& m : measurements) out.push_back(m.delay_samples);
  return out;
}

std::vector<std::string> TdoaDynamic::labels() const {
  std::vector<std::string> out;
  out.reserve(measurements.size());
  for (const auto& m : measurements) out.push_back(m.label);
  return out;
}

int LagCurve::argmax() const {
  // First maximum in lag order; ties resolve toward the most negative lag.
  const auto it = std::max_element(values.begin(), values.end());
  return static_cast<int>(it - values.begin()) - max_lag;
}

double LagCurve::refined_argmax() const {
  const int peak = argmax();
  if (peak <= -max_lag || peak >= max_lag) return peak;
  const double left = at(peak - 1), mid = at(peak), right = at(peak + 1);
  const double denom = left - 2.0 * mid + right;
  if (denom >= 0.0) return peak;
  return peak + 0.5 * (left - right) / denom;
}

LagCurve normalized_cross_correlation(std::span<const double> a, std::span<const double> b, int max_lag) {
  check_windows(a, b, max_lag);
  double ea = 0.0, eb = 0.0;
  const auto ca = centered(a, &ea);
  const auto cb = centered(b, &eb);
  check_energy(ea, a.size());
  check_energy(eb, b.size());

  LagCurve curve{max_lag, std::vector<double>(2 * static_cast<std::size_t>(max_lag) + 1)};
  kernels::parallel::lagged_products(ca, cb, max_lag, curve.values);
  const double norm = std::sqrt(ea * eb);
  for (auto& v : curve.values) v /= norm;
  return curve;
}

LagCurve gcc_phat(std::span<const double> a, std::span<const double> b, int max_lag, double cutoff) {
  check_windows(a, b, max_lag);
  double ea = 0.0, eb = 0.0;
  auto ca = centered(a, &ea);
  auto cb = centered(b, &eb);
  check_energy(ea, a.size());
  check_energy(eb, b.size());

  const std::size_t n = fft::next_plan_size(std::max(a.size(), b.size()) + static_cast<std::size_t>(max_lag));
  ca.resize(n, 0.0);
  cb.resize(n, 0.0);
  std::vector<fft::Complex> spec_a(n / 2 + 1), spec_b(n / 2 + 1);
  fft::forward(ca, spec_a);
  fft::forward(cb, spec_b);
  // conj(A) * B transforms back to r[d] = sum_i a[i] b[i + d].
  for (std::size_t k = 0; k < spec_a.size(); ++k) {
    const double ar = spec_a[k].real(), ai = spec_a[k].imag(), br = spec_b[k].real(), bi = spec_b[k].imag();
    spec_a[k] = fft::Complex(ar * br + ai * bi, ar * bi - ai * br);
  }
  kernels::parallel::phat_weight(spec_a, kPhatRelativeFloor);
  if (cutoff < 0.5) {
    const auto first = static_cast<std::size_t>(std::floor(cutoff * static_cast<double>(n))) + 1;
    for (std::size_t k = first; k < spec_a.size(); ++k) spec_a[k] = 0.0;
  }

  std::vector<double> r(n);
  fft::inverse(spec_a, r);
  LagCurve curve{max_lag, std::vector<double>(2 * static_cast<std::size_t>(max_lag) + 1)};
  const double scale = 1.0 / static_cast<double>(n);
  for (int d = -max_lag; d <= max_lag; ++d) {
    const std::size_t idx = d >= 0 ? static_cast<std::size_t>(d) : n - static_cast<std::size_t>(-d);
    curve.values[static_cast<std::size_t>(d + max_lag)] = r[idx] * scale;
  }
  return curve;
}

int max_lag_for(const DeviceSpec& device, int sample_rate, double speed_of_sound) {
  // Rounded to 1e-9 first so that exactly representable products do not
  // pick up an extra sample from floating error.
  const double lag = device.mic_spacing_m / speed_of_sound * sample_rate;
  return static_cast<int>(std::ceil(std::round(lag * 1e9) / 1e9)) + 8;
}

TdoaMeasurement estimate_tdoa(const StereoRecording& recording, const PhonemeSegment& segment,
                              TdoaMethod method, const DeviceSpec& device, double speed_of_sound) {
  if (segment.start >= segment.end || segment.end > recording.frames())
    throw InvalidAlignmentError("segment is outside the recording");
  const int max_lag = max_lag_for(device, recording.sample_rate, speed_of_sound);
  if (segment.length() < 2 * static_cast<std::size_t>(max_lag))
    throw SegmentTooShortError("segment '" + segment.label + "' has " + std::to_string(segment.length()) +
                               " samples, needs at least " + std::to_string(2 * max_lag));

  // a = bottom, b = top: a positive lag means the top channel is later.
  const std::span<const double> bottom(recording.bottom.data() + segment.start, segment.length());
  const std::span<const double> top(recording.top.data() + segment.start, segment.length());
  const LagCurve curve = method == TdoaMethod::GccPhat ? gcc_phat(bottom, top, max_lag, std::min(0.5, kPhatAnalysisHz / recording.sample_rate))
                                                       : normalized_cross_correlation(bottom, top, max_lag);
  TdoaMeasurement m;
  m.label = segment.label;
  m.method = method;
  const int peak = curve.argmax();
  m.delay_samples = peak;
  m.refined_delay = curve.refined_argmax();
  m.peak_value = curve.at(peak);
  return m;
}

TdoaDynamic measure_dynamic(const StereoRecording& recording, const std::vector<PhonemeSegment>& segments,
                            TdoaMethod method, const DeviceSpec& device, double speed_of_sound) {
  TdoaDynamic dynamic;
  dynamic.sample_rate = recording.sample_rate;
  dynamic.device = device;
  dynamic.measurements.resize(segments.size());

  std::vector<std::exception_ptr> failures(segments.size());
  const auto count = static_cast<long>(segments.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      dynamic.measurements[static_cast<std::size_t>(i)] =
          estimate_tdoa(recording, segments[static_cast<std::size_t>(i)], method, device, speed_of_sound);
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return dynamic;
}

}  // namespace tdl
