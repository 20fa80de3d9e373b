#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdl/signal_io.hpp"

namespace tdl {

// Half-open sample interval [start, end) carrying a phoneme label.
struct PhonemeSegment {
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool operator==(const PhonemeSegment&) const = default;
};

inline constexpr int kAlignmentVersion = 1;

// Throws InvalidAlignmentError unless every segment satisfies
// 0 <= start < end <= frames and the list is sorted and non-overlapping.
void validate_segments(const std::vector<PhonemeSegment>& segments, std::size_t frames);

// Alignment file:
//   {"version": 1, "sample_rate": int, "segments": [{"phoneme": str, "start": int, "end": int}]}
// Labels must be inventory symbols or "?".
std::vector<PhonemeSegment> parse_alignment(const nlohmann::json& doc, const StereoRecording& recording);
std::vector<PhonemeSegment> load_alignment(const std::filesystem::path& path,
                                           const StereoRecording& recording);
nlohmann::json alignment_to_json(const std::vector<PhonemeSegment>& segments, int sample_rate);
void write_alignment(const std::filesystem::path& path, const std::vector<PhonemeSegment>& segments,
                     int sample_rate);

struct EnergySegmenterOptions {
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  double threshold_db = 15.0;
  double floor_percentile = 5.0;
};

// Fallback segmenter on the bottom channel: maximal runs of frames whose
// short-time energy is threshold_db above the recording's noise floor (the
// floor_percentile-th frame energy). Each run becomes one "?" segment.
std::vector<PhonemeSegment> segment_by_energy(const StereoRecording& recording,
                                              const EnergySegmenterOptions& options = {});

}  // namespace tdl
