#pragma once

#include <filesystem>
#include <vector>

namespace tdl {

// Two synchronized microphone channels. Channel 0 of a WAV file is always the
// top microphone and channel 1 the bottom microphone; nothing in the toolkit
// swaps them implicitly.
struct StereoRecording {
  int sample_rate = 0;
  std::vector<double> top;
  std::vector<double> bottom;

  std::size_t frames() const noexcept { return top.size(); }
  // Throws FormatError on a violated invariant (length mismatch, rate below
  // 44100 Hz, sample outside [-1, 1]).
  void validate() const;
};

inline constexpr int kMinSampleRate = 44100;

// True for the three rates the ranging resolution figures assume (48/96/192 kHz).
bool is_standard_rate(int sample_rate) noexcept;

// PCM RIFF/WAVE, exactly two channels, 16/24/32-bit integer samples.
// Samples are normalized by 2^(bits-1).
StereoRecording load_wav(const std::filesystem::path& path);

// bit_depth must be 16, 24 or 32. Samples are clipped symmetrically to [-1, 1]
// and rounded to the nearest integer code.
void write_wav(const StereoRecording& recording, const std::filesystem::path& path, int bit_depth);

}  // namespace tdl
