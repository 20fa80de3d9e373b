#include "tdl/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "tdl/errors.hpp"
#include "tdl/kernels.hpp"
#include "tdl/phonemes.hpp"

namespace tdl {

void validate_segments(const std::vector<PhonemeSegment>& segments, std::size_t frames) {
  std::size_t previous_end = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.start >= s.end || s.end > frames)
      throw InvalidAlignmentError("segment " + std::to_string(i) + " [" + std::to_string(s.start) +
                                  ", " + std::to_string(s.end) + ") is outside [0, " +
                                  std::to_string(frames) + ")");
    if (s.start < previous_end)
      throw InvalidAlignmentError("segment " + std::to_string(i) + " overlaps or precedes its predecessor");
    previous_end = s.end;
  }
}

std::vector<PhonemeSegment> parse_alignment(const nlohmann::json& doc, const StereoRecording& recording) {
  try {
    if (doc.contains("version") && doc.at("version").get<int>() != kAlignmentVersion)
      throw SchemaError("unsupported alignment version " + doc.at("version").dump());
    const int rate = doc.at("sample_rate").get<int>();
    if (rate != recording.sample_rate)
      throw RateMismatchError("alignment sample rate " + std::to_string(rate) +
                              " differs from recording rate " + std::to_string(recording.sample_rate));
    const auto& inventory = PhonemeInventory::english();
    std::vector<PhonemeSegment> segments;
    for (const auto& entry : doc.at("segments")) {
      PhonemeSegment s;
      s.label = entry.at("phoneme").get<std::string>();
      const auto start = entry.at("start").get<long long>();
      const auto end = entry.at("end").get<long long>();
      if (start < 0 || end < 0) throw InvalidAlignmentError("negative sample index in alignment");
      s.start = static_cast<std::size_t>(start);
      s.end = static_cast<std::size_t>(end);
      if (s.label != kUnlabeled && !inventory.contains(s.label))
        throw UnknownPhonemeError("unknown phoneme '" + s.label + "' in alignment");
      segments.push_back(std::move(s));
    }
    validate_segments(segments, recording.frames());
    return segments;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed alignment: ") + e.what());
  }
}

std::vector<PhonemeSegment> load_alignment(const std::filesystem::path& path,
                                           const StereoRecording& recording) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("cannot open alignment " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("alignment is not valid JSON: " + std::string(e.what()));
  }
  return parse_alignment(doc, recording);
}

nlohmann::json alignment_to_json(const std::vector<PhonemeSegment>& segments, int sample_rate) {
  nlohmann::json doc;
  doc["version"] = kAlignmentVersion;
  doc["sample_rate"] = sample_rate;
  doc["segments"] = nlohmann::json::array();
  for (const auto& s : segments)
    doc["segments"].push_back({{"phoneme", s.label}, {"start", s.start}, {"end", s.end}});
  return doc;
}

void write_alignment(const std::filesystem::path& path, const std::vector<PhonemeSegment>& segments,
                     int sample_rate) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << alignment_to_json(segments, sample_rate).dump(2) << '\n';
}

std::vector<PhonemeSegment> segment_by_energy(const StereoRecording& recording,
                                              const EnergySegmenterOptions& options) {
  if (!(options.frame_ms > 0.0) || !(options.hop_ms > 0.0))
    throw PreconditionError("frame_ms and hop_ms must be positive");
  const auto frame = static_cast<std::size_t>(std::lround(options.frame_ms * 1e-3 * recording.sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(options.hop_ms * 1e-3 * recording.sample_rate));
  const auto& x = recording.bottom;
  const std::size_t frames = kernels::frame_count(x.size(), std::max<std::size_t>(frame, 1), std::max<std::size_t>(hop, 1));
  if (frames == 0) return {};

  std::vector<double> energy(frames);
  kernels::parallel::frame_energy(x, frame, hop, energy);

  const double peak = *std::max_element(energy.begin(), energy.end());
  if (peak <= 0.0) return {};

  std::vector<double> sorted = energy;
  const auto rank = static_cast<std::size_t>(
      std::floor(options.floor_percentile / 100.0 * static_cast<double>(frames - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(rank), sorted.end());
  // Digital silence has zero energy; a floor relative to the peak keeps the
  // threshold finite and gain invariant.
  const double noise_floor = std::max(sorted[rank], peak * 1e-12);
  const double threshold = noise_floor * std::pow(10.0, options.threshold_db / 10.0);

  std::vector<PhonemeSegment> segments;
  std::size_t f = 0;
  while (f < frames) {
    if (energy[f] <= threshold) {
      ++f;
      continue;
    }
    std::size_t last = f;
    while (last + 1 < frames && energy[last + 1] > threshold) ++last;
    PhonemeSegment s{std::string(kUnlabeled), f * hop, std::min(x.size(), last * hop + frame)};
    if (!segments.empty() && s.start < segments.back().end) s.start = segments.back().end;
    if (s.start < s.end) segments.push_back(std::move(s));
    f = last + 1;
  }
  return segments;
}

}  // namespace tdl
