#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdl/segmentation.hpp"
#include "tdl/signal_io.hpp"

namespace tdl {

inline constexpr double kSpeedOfSound = 340.0;  // m/s

struct DeviceSpec {
  double mic_spacing_m = 0.15;
  std::string name = "generic";

  // 0.05 <= mic_spacing_m <= 0.30, else PreconditionError.
  void validate() const;
  bool operator==(const DeviceSpec&) const = default;
};

// Stereo phones with published top/bottom microphone spacings.
DeviceSpec galaxy_note3();
DeviceSpec galaxy_note5();
DeviceSpec galaxy_s5();

enum class TdoaMethod { CrossCorrelation, GccPhat };
std::string_view to_string(TdoaMethod m) noexcept;
TdoaMethod parse_tdoa_method(std::string_view name);

// Sign convention: delay_samples > 0 means the sound reaches the TOP
// microphone later than the bottom one.
struct TdoaMeasurement {
  std::string label;
  double delay_samples = 0.0;   // integer argmax, possibly rescaled by normalization
  double refined_delay = 0.0;   // parabolic sub-sample refinement of the same peak
  double peak_value = 0.0;
  TdoaMethod method = TdoaMethod::GccPhat;
};

struct TdoaDynamic {
  std::vector<TdoaMeasurement> measurements;
  int sample_rate = 0;
  DeviceSpec device;

  std::vector<double> delays() const;
  std::vector<std::string> labels() const;
};

// Correlation values for lags -max_lag..max_lag.
struct LagCurve {
  int max_lag = 0;
  std::vector<double> values;

  double at(int lag) const { return values[static_cast<std::size_t>(lag + max_lag)]; }
  int argmax() const;
  // Parabolic interpolation around argmax; returns argmax itself at the edges.
  double refined_argmax() const;
};

// Mean-removed, variance-normalized correlation of a against b shifted by d:
//   CC(d) = sum_i a'(i) b'(i + d) / sqrt(sum a'^2 * sum b'^2)
// A peak at d > 0 means b lags a by d samples.
LagCurve normalized_cross_correlation(std::span<const double> a, std::span<const double> b, int max_lag);

// Generalized cross-correlation with phase transform, same lag convention.
// `cutoff` (cycles per sample, <= 0.5) drops whitened bins above it.
inline constexpr double kPhatRelativeFloor = 1e-12;
LagCurve gcc_phat(std::span<const double> a, std::span<const double> b, int max_lag, double cutoff = 0.5);

// estimate_tdoa whitens only up to this frequency: above the speech band the
// bins hold nothing but independent noise, which PHAT would weight like signal.
inline constexpr double kPhatAnalysisHz = 20000.0;

// ceil(spacing / c * fs) + 8 margin samples.
int max_lag_for(const DeviceSpec& device, int sample_rate, double speed_of_sound = kSpeedOfSound);

TdoaMeasurement estimate_tdoa(const StereoRecording& recording, const PhonemeSegment& segment,
                              TdoaMethod method, const DeviceSpec& device,
                              double speed_of_sound = kSpeedOfSound);

// Segments are estimated in parallel; the result keeps segment order.
TdoaDynamic measure_dynamic(const StereoRecording& recording, const std::vector<PhonemeSegment>& segments,
                            TdoaMethod method, const DeviceSpec& device,
                            double speed_of_sound = kSpeedOfSound);

}  // namespace tdl
