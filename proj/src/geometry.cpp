#include "tdl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tdl/errors.hpp"
#include "tdl/fft.hpp"

namespace tdl {
namespace {

constexpr double kBracketLo = 1e-4;
constexpr double kBracketHi = 10.0;
constexpr double kBisectionTol = 1e-12;
constexpr double kMaxFaceDistance = 1.0;
constexpr double kMinPeakSeparation = 1e-4;  // s

double to_metres(double samples, int fs, double c) { return samples * c / fs; }
double to_samples(double metres, int fs, double c) { return metres / c * fs; }

template <class F>
double bisect(F&& residual, double lo, double hi) {
  double f_lo = residual(lo);
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = residual(mid);
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void require_upright(const DevicePose& pose) {
  pose.validate();
  if (pose.alpha != 0.0) throw InvalidPoseError("enrollment pose for a transform must be upright");
}

// Path difference after rotation for a source at mouth height, x from the phone.
double rotated_path_difference(double x, double l1, double l2, double l, double alpha, PivotForm pivot) {
  const double vertical = (pivot == PivotForm::Literal ? l2 : l1) - l * std::cos(alpha);
  const double horizontal = l * std::sin(alpha) + x;
  const double d1 = std::hypot(l1, x);
  const double d2 = std::hypot(horizontal, vertical);
  const double result = d1 - d2;
  // Triangle inequality against the implied microphone points (l1, x) and
  // (vertical, horizontal), source at the origin.
  const double baseline = std::hypot(l1 - vertical, x - horizontal);
  if (std::abs(result) > baseline + 1e-9) throw std::logic_error("path difference exceeds microphone baseline");
  return result;
}

}  // namespace

void DevicePose::validate() const {
  if (!(x > 0.0)) throw InvalidPoseError("pose.x must be positive");
  if (!(l > 0.0)) throw InvalidPoseError("pose.l must be positive");
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw InvalidPoseError("pose.l1 and pose.l2 must be non-negative");
  if (!(std::abs(alpha) < std::numbers::pi / 2)) throw InvalidPoseError("|pose.alpha| must be below pi/2");
}

std::string_view to_string(PivotForm p) noexcept { return p == PivotForm::Literal ? "literal" : "top_mic"; }

PivotForm parse_pivot(std::string_view name) {
  if (name == "literal") return PivotForm::Literal;
  if (name == "top_mic" || name == "corrected") return PivotForm::TopMic;
  throw ConfigError("unknown geometry.pivot '" + std::string(name) + "' (expected literal|top_mic)");
}

MicPair mic_positions(const DevicePose& pose) {
  const Point top{pose.l1, pose.x};
  const double baseline = pose.l1 + pose.l2;
  const Point bottom{top.y - baseline * std::cos(pose.alpha), top.z + baseline * std::sin(pose.alpha)};
  return {top, bottom};
}

double distance(Point a, Point b) { return std::hypot(a.y - b.y, a.z - b.z); }

double path_difference(const DevicePose& pose, Point source) {
  const auto mics = mic_positions(pose);
  return distance(source, mics.top) - distance(source, mics.bottom);
}

double pose_to_tdoa(const DevicePose& pose, Point source_offset, int sample_rate, double speed_of_sound) {
  pose.validate();
  return to_samples(path_difference(pose, source_offset), sample_rate, speed_of_sound);
}

double solve_source_distance(double tdoa_samples, double l1, double l2, int sample_rate, double speed_of_sound) {
  const double target = to_metres(tdoa_samples, sample_rate, speed_of_sound);
  if (l1 == l2) {
    if (target == 0.0) throw UnderdeterminedError("l1 == l2 and zero delay: every x is consistent");
    throw NoSolutionError("l1 == l2 admits only a zero delay");
  }
  const double window = l1 - l2;
  if (!(target * window > 0.0) || !(std::abs(target) < std::abs(window)))
    throw NoSolutionError("path difference " + std::to_string(target) + " m is outside the window (0, " +
                          std::to_string(window) + ")");
  auto residual = [&](double x) { return std::hypot(l1, x) - std::hypot(l2, x) - target; };
  if ((residual(kBracketLo) > 0.0) == (residual(kBracketHi) > 0.0))
    throw NoSolutionError("no root inside the [1e-4, 10] m bracket");
  return bisect(residual, kBracketLo, kBracketHi);
}

double solve_source_height(double tdoa_samples, const DevicePose& pose, int sample_rate, double speed_of_sound) {
  pose.validate();
  const double target = to_metres(tdoa_samples, sample_rate, speed_of_sound);
  const DevicePose upright{pose.x, pose.l1, pose.l2, pose.l, 0.0};
  auto residual = [&](double h) { return path_difference(upright, {h, 0.0}) - target; };
  const double lo = -pose.l2, hi = pose.l1;
  if ((residual(lo) > 0.0) == (residual(hi) > 0.0))
    throw NoSolutionError("delay is not reachable by a source between the microphones");
  return bisect(residual, lo, hi);
}

double transform_tdoa_for_angle(double tdoa1, const DevicePose& pose, double alpha, int sample_rate,
                                const GeometryOptions& options) {
  require_upright(pose);
  if (!(std::abs(alpha) < std::numbers::pi / 2)) throw InvalidPoseError("|alpha| must be below pi/2");
  const double x = solve_source_distance(tdoa1, pose.l1, pose.l2, sample_rate, options.speed_of_sound);
  const double diff = rotated_path_difference(x, pose.l1, pose.l2, pose.l, alpha, options.pivot);
  return to_samples(diff, sample_rate, options.speed_of_sound);
}

double transform_tdoa_for_distance(double tdoa1, const DevicePose& pose, double delta_x, int sample_rate,
                                   const GeometryOptions& options) {
  require_upright(pose);
  const double x = solve_source_distance(tdoa1, pose.l1, pose.l2, sample_rate, options.speed_of_sound);
  if (!(x + delta_x > 0.0)) throw InvalidPoseError("phone would pass through the source (x + delta_x <= 0)");
  if (delta_x == 0.0) return tdoa1;
  const double moved = x + delta_x;
  const double diff = std::hypot(pose.l1, moved) - std::hypot(pose.l2, moved);
  return to_samples(diff, sample_rate, options.speed_of_sound);
}

double transform_tdoa_for_pose(double tdoa1, const DevicePose& pose, const PoseChange& change, int sample_rate,
                               const GeometryOptions& options) {
  require_upright(pose);
  if (!(std::abs(change.alpha) < std::numbers::pi / 2)) throw InvalidPoseError("|alpha| must be below pi/2");
  const double x = solve_source_distance(tdoa1, pose.l1, pose.l2, sample_rate, options.speed_of_sound);
  const double moved = x + change.delta_x;
  if (!(moved > 0.0)) throw InvalidPoseError("phone would pass through the source (x + delta_x <= 0)");
  if (change.is_identity()) return tdoa1;
  const double diff = rotated_path_difference(moved, pose.l1, pose.l2, pose.l, change.alpha, options.pivot);
  return to_samples(diff, sample_rate, options.speed_of_sound);
}

double adapt_delay(double tdoa1, const DevicePose& pose, const PoseChange& change, int sample_rate,
                   const GeometryOptions& options) {
  require_upright(pose);
  if (change.is_identity()) return tdoa1;
  try {
    return transform_tdoa_for_pose(tdoa1, pose, change, sample_rate, options);
  } catch (const NoSolutionError&) {
  } catch (const UnderdeterminedError&) {
  }
  const double h = solve_source_height(tdoa1, pose, sample_rate, options.speed_of_sound);
  DevicePose moved = pose;
  moved.x += change.delta_x;
  moved.alpha = change.alpha;
  return pose_to_tdoa(moved, {h, 0.0}, sample_rate, options.speed_of_sound);
}

std::vector<double> make_beep(int sample_rate, const BeepSpec& spec) {
  if (spec.f_end_hz >= 0.5 * sample_rate || spec.f_start_hz >= 0.5 * sample_rate)
    throw PreconditionError("beep band exceeds the Nyquist frequency");
  const auto n = static_cast<std::size_t>(std::lround(spec.duration_s * sample_rate));
  const std::size_t edge = std::max<std::size_t>(1, n / 20);
  const double sweep = (spec.f_end_hz - spec.f_start_hz) / spec.duration_s;
  std::vector<double> beep(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double phase = 2.0 * std::numbers::pi * (spec.f_start_hz * t + 0.5 * sweep * t * t);
    double w = 1.0;
    if (i < edge) w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / edge);
    if (i >= n - edge) w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n - 1 - i) / edge);
    beep[i] = w * std::sin(phase);
  }
  return beep;
}

std::vector<double> make_beep_train(int sample_rate, int count, const BeepSpec& spec) {
  if (count < 1) throw PreconditionError("beep train needs at least one beep");
  if (!(spec.gap_s >= 0.0)) throw PreconditionError("beep gap must be non-negative");
  const auto beep = make_beep(sample_rate, spec);
  const auto gap = static_cast<std::size_t>(std::lround(spec.gap_s * sample_rate));
  std::vector<double> train;
  train.reserve(static_cast<std::size_t>(count) * (beep.size() + gap));
  for (int i = 0; i < count; ++i) {
    if (i > 0) train.insert(train.end(), gap, 0.0);
    train.insert(train.end(), beep.begin(), beep.end());
  }
  return train;
}

namespace {

// Analytic (complex) cross-correlation r[k] = sum_i beep[i] x[i + k], k in [0, x.size()).
std::vector<std::complex<double>> analytic_correlation(std::span<const double> x, std::span<const double> beep) {
  const std::size_t n = fft::next_pow2(x.size() + beep.size());
  std::vector<double> xp(n, 0.0), bp(n, 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(beep.begin(), beep.end(), bp.begin());
  std::vector<fft::Complex> sx(n / 2 + 1), sb(n / 2 + 1);
  fft::forward(xp, sx);
  fft::forward(bp, sb);
  // Analytic signal of the correlation: Re is the plain inverse of C, Im the
  // inverse of -iC with the DC and Nyquist bins removed (Hilbert transform).
  std::vector<fft::Complex> re(n / 2 + 1), im(n / 2 + 1);
  for (std::size_t k = 0; k < sx.size(); ++k) {
    re[k] = std::conj(sb[k]) * sx[k];
    im[k] = (k == 0 || k == n / 2) ? fft::Complex{} : fft::Complex(0.0, -1.0) * re[k];
  }
  std::vector<double> real_part(n), imag_part(n);
  fft::inverse(re, real_part);
  fft::inverse(im, imag_part);
  std::vector<std::complex<double>> out(x.size());
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = {real_part[k] * scale, imag_part[k] * scale};
  return out;
}

}  // namespace

FaceDistanceEstimate estimate_face_distance(const StereoRecording& echo_recording, std::span<const double> beep,
                                            double speed_of_sound) {
  const auto& x = echo_recording.bottom;
  if (beep.empty() || x.size() < beep.size()) throw NoEchoError("recording is shorter than the beep");
  const int fs = echo_recording.sample_rate;
  auto corr = analytic_correlation(x, beep);

  std::vector<double> env(corr.size());
  for (std::size_t k = 0; k < corr.size(); ++k) env[k] = std::abs(corr[k]);
  const auto body = static_cast<std::size_t>(std::max_element(env.begin(), env.end()) - env.begin());
  if (env[body] <= 0.0) throw NoEchoError("no correlation peak");

  // Cancel the body-conduction copy using the beep's autocorrelation.
  std::vector<double> probe(x.size(), 0.0);
  for (std::size_t i = 0; i < beep.size() && body + i < probe.size(); ++i) probe[body + i] = beep[i];
  const auto templ = analytic_correlation(probe, beep);
  const std::complex<double> gain = corr[body] / templ[body];
  for (std::size_t k = 0; k < corr.size(); ++k) {
    corr[k] -= gain * templ[k];
    env[k] = std::abs(corr[k]);
  }

  const double floor = std::sqrt(std::inner_product(env.begin(), env.end(), env.begin(), 0.0) /
                                 static_cast<double>(env.size()));
  const auto first = body + static_cast<std::size_t>(std::ceil(kMinPeakSeparation * fs));
  const auto last = std::min(env.size() - 1, body + static_cast<std::size_t>(
                                                        std::ceil(2.0 * kMaxFaceDistance / speed_of_sound * fs)));
  if (first + 1 >= last) throw NoEchoError("recording too short to contain a reflection");

  double strongest = 0.0;
  for (std::size_t k = first; k <= last; ++k) strongest = std::max(strongest, env[k]);
  const double threshold = std::max(3.0 * floor, 0.5 * strongest);
  if (!(strongest > 3.0 * floor)) throw NoEchoError("no reflection above the noise floor");

  for (std::size_t k = std::max<std::size_t>(first, 1); k < last; ++k) {
    if (env[k] >= threshold && env[k] >= env[k - 1] && env[k] >= env[k + 1]) {
      double offset = 0.0;
      const double denom = env[k - 1] - 2.0 * env[k] + env[k + 1];
      if (denom < 0.0) offset = 0.5 * (env[k - 1] - env[k + 1]) / denom;
      FaceDistanceEstimate est;
      est.body_peak_sample = static_cast<double>(body);
      est.face_peak_sample = static_cast<double>(k) + offset;
      est.distance_m = (est.face_peak_sample - est.body_peak_sample) / fs * speed_of_sound / 2.0;
      return est;
    }
  }
  throw NoEchoError("no qualifying reflection peak");
}

}  // namespace tdl
