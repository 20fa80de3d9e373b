#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "tdl/signal_io.hpp"
#include "tdl/tdoa.hpp"

// Source-to-device geometry in the vertical plane through mouth and phone.
//
// Frame: origin at the mouth reference point, y points up, z points from the
// user towards the phone. For an upright phone at horizontal distance x the
// top microphone sits at (l1, x) and the bottom one at (-l2, x). Tilting the
// phone by alpha rotates it about the top microphone, swinging the bottom end
// away from the user:
//   bottom = top + (l1 + l2) * (-cos alpha, sin alpha)
// Path difference is d_top - d_bottom, so positive values mean the top
// microphone hears the sound later.
namespace tdl {

struct DevicePose {
  double x = 0.03;    // horizontal mouth-to-phone distance (m)
  double l1 = 0.14;   // vertical distance mouth -> top mic (m)
  double l2 = 0.01;   // vertical distance mouth -> bottom mic (m)
  double l = 0.15;    // phone length, top-to-bottom mic (m)
  double alpha = 0.0; // tilt (rad), 0 = upright

  // x > 0, l > 0, l1 >= 0, l2 >= 0, |alpha| < pi/2; throws InvalidPoseError.
  void validate() const;
  bool operator==(const DevicePose&) const = default;

  // Upright phone, 3 cm in front of the mouth, mouth 1 cm above the bottom mic.
  static DevicePose reference() { return {}; }
};

struct Point {
  double y = 0.0;
  double z = 0.0;
};

struct MicPair {
  Point top;
  Point bottom;
};

// How the angle transform places the rotated bottom microphone.
//   Literal: vertical term (l2 - l cos alpha), taken at face value.
//            Not the identity at alpha = 0.
//   TopMic:  vertical term (l1 - l cos alpha), a rotation about the top
//            microphone. Identity at alpha = 0 when l = l1 + l2.
enum class PivotForm { Literal, TopMic };
std::string_view to_string(PivotForm p) noexcept;
PivotForm parse_pivot(std::string_view name);

struct GeometryOptions {
  double speed_of_sound = kSpeedOfSound;
  PivotForm pivot = PivotForm::TopMic;
};

MicPair mic_positions(const DevicePose& pose);
double distance(Point a, Point b);
// d_top - d_bottom in metres for a source at `source`.
double path_difference(const DevicePose& pose, Point source);
// Forward model shared by the simulator and the inverse solvers.
double pose_to_tdoa(const DevicePose& pose, Point source_offset, int sample_rate,
                    double speed_of_sound = kSpeedOfSound);

// Unique x > 0 with sqrt(l1^2 + x^2) - sqrt(l2^2 + x^2) = tdoa * c / fs, by
// bisection on [1e-4, 10] m. Throws NoSolutionError outside the solvability
// window and UnderdeterminedError when l1 == l2 and the delay is zero.
double solve_source_distance(double tdoa_samples, double l1, double l2, int sample_rate,
                             double speed_of_sound = kSpeedOfSound);

// Height h in [-l2, l1] of a source at mouth depth (z = 0) producing the given
// delay under `pose`. Covers delays the distance solve cannot (e.g. negative).
double solve_source_height(double tdoa_samples, const DevicePose& pose, int sample_rate,
                           double speed_of_sound = kSpeedOfSound);

// The enrollment pose passed to the transforms must be upright (alpha = 0).
double transform_tdoa_for_angle(double tdoa1, const DevicePose& pose, double alpha, int sample_rate,
                                const GeometryOptions& options = {});
double transform_tdoa_for_distance(double tdoa1, const DevicePose& pose, double delta_x, int sample_rate,
                                   const GeometryOptions& options = {});

struct PoseChange {
  double delta_x = 0.0;  // m, positive = phone moved away from the face
  double alpha = 0.0;    // rad
  bool is_identity() const noexcept { return delta_x == 0.0 && alpha == 0.0; }
};

// Distance change followed by rotation.
double transform_tdoa_for_pose(double tdoa1, const DevicePose& pose, const PoseChange& change,
                               int sample_rate, const GeometryOptions& options = {});

// Profile-level adaptation of one enrolled delay. Uses the distance solve
// when the delay is inside its window and otherwise falls back to the height
// solve and the forward model.
double adapt_delay(double tdoa1, const DevicePose& pose, const PoseChange& change, int sample_rate,
                   const GeometryOptions& options = {});

// Ranging beep: linear chirp with 5 % raised-cosine edges.
struct BeepSpec {
  double f_start_hz = 18000.0;
  double f_end_hz = 23000.0;
  double duration_s = 0.050;
  double gap_s = 0.050;  // silence between consecutive beeps of a train
};
std::vector<double> make_beep(int sample_rate, const BeepSpec& spec = {});
// `count` beeps separated by spec.gap_s of silence.
std::vector<double> make_beep_train(int sample_rate, int count, const BeepSpec& spec = {});

struct FaceDistanceEstimate {
  double distance_m = 0.0;
  double body_peak_sample = 0.0;
  double face_peak_sample = 0.0;
};

// Matched-filters the bottom channel against the beep. The strongest peak is
// the body-conduction path (time zero); it is cancelled with the beep's own
// autocorrelation and the face reflection is the earliest remaining envelope
// peak that is at least 0.1 ms later, above 3x the residual noise floor, at
// least half the strongest residual peak, and within 1 m.
// distance = (t_face - t_body) * c / 2. Throws NoEchoError.
FaceDistanceEstimate estimate_face_distance(const StereoRecording& echo_recording, std::span<const double> beep,
                                            double speed_of_sound = kSpeedOfSound);

}  // namespace tdl
