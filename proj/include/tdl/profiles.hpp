#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdl/geometry.hpp"
#include "tdl/segmentation.hpp"
#include "tdl/tdoa.hpp"

namespace tdl {

enum class ProfileMode { TextDependent, TextIndependent };
std::string_view to_string(ProfileMode m) noexcept;
ProfileMode parse_profile_mode(std::string_view name);

inline constexpr int kProfileVersion = 1;
inline constexpr int kMinEnrollmentTrials = 3;
// Floor applied to template stds wherever they act as a Gaussian width.
inline constexpr double kMinTemplateStd = 0.5;

struct PhonemeTemplate {
  std::string label;
  double mean_delay = 0.0;  // samples
  double std_delay = 0.0;   // samples, sample standard deviation (n - 1)
  int trial_count = 0;
  std::vector<double> trial_delays;

  double effective_std() const noexcept { return std::max(std_delay, kMinTemplateStd); }
  bool operator==(const PhonemeTemplate&) const = default;
};

struct UserProfile {
  std::string user_id;
  ProfileMode mode = ProfileMode::TextDependent;
  std::map<std::string, std::vector<PhonemeTemplate>> passphrase_templates;
  std::map<std::string, PhonemeTemplate> phoneme_templates;
  DevicePose enrollment_pose;
  DeviceSpec device;
  int sample_rate = 0;

  // Throws UnknownPhonemeError / PreconditionError for a missing passphrase.
  const std::vector<PhonemeTemplate>& passphrase(const std::string& passphrase_id) const;
  bool operator==(const UserProfile&) const = default;
};

struct EnrollmentTrial {
  const StereoRecording& recording;
  const std::vector<PhonemeSegment>& alignment;
};

struct PhonemeSample {
  const StereoRecording& recording;
  PhonemeSegment segment;
};

struct EnrollmentOptions {
  TdoaMethod method = TdoaMethod::GccPhat;
  double speed_of_sound = kSpeedOfSound;
};

PhonemeTemplate template_from_delays(std::string label, std::span<const double> delays);

// Position-wise statistics over already measured trials. Throws
// InsufficientTrialsError (< 3) and AlignmentMismatchError (label sequences differ).
std::vector<PhonemeTemplate> templates_from_dynamics(std::span<const TdoaDynamic> trials);

UserProfile enroll_text_dependent(const std::string& user_id, const std::string& passphrase_id,
                                  std::span<const EnrollmentTrial> trials, const DevicePose& pose,
                                  const DeviceSpec& device, const EnrollmentOptions& options = {});

// Adds (or replaces) one passphrase on an existing text-dependent profile.
void add_passphrase(UserProfile& profile, const std::string& passphrase_id,
                    std::span<const EnrollmentTrial> trials, const EnrollmentOptions& options = {});

// Every inventory phoneme needs >= 3 samples; IncompleteInventoryError lists the missing ones.
UserProfile enroll_text_independent(const std::string& user_id,
                                    const std::map<std::string, std::vector<PhonemeSample>>& samples,
                                    const DevicePose& pose, const DeviceSpec& device,
                                    const EnrollmentOptions& options = {});

// Same, from delays that were measured elsewhere.
UserProfile profile_from_phoneme_delays(const std::string& user_id,
                                        const std::map<std::string, std::vector<double>>& delays,
                                        const DevicePose& pose, const DeviceSpec& device, int sample_rate);

std::vector<PhonemeTemplate> assemble_template(const UserProfile& profile, std::span<const std::string> labels);

// Rescales every delay by to.spacing / from.spacing and by target_rate / dynamic.sample_rate.
// target_rate == 0 keeps the dynamic's rate.
TdoaDynamic normalize_dynamic(const TdoaDynamic& dynamic, const DeviceSpec& from, const DeviceSpec& to,
                              int target_rate = 0);

// Moves enrolled templates to a new device pose. Means and per-trial delays
// go through adapt_delay; stds are scaled by the local slope of the mapping.
std::vector<PhonemeTemplate> adapt_templates(std::span<const PhonemeTemplate> templates, const DevicePose& pose,
                                             const PoseChange& change, int sample_rate,
                                             const GeometryOptions& options = {});

// Group std for each template: the mean template std over all profile phonemes
// sharing its articulation class. Needs a text-independent profile.
std::vector<double> class_group_std(const UserProfile& profile, std::span<const PhonemeTemplate> templates);

nlohmann::json profile_to_json(const UserProfile& profile);
UserProfile profile_from_json(const nlohmann::json& doc);
void save_profile(const UserProfile& profile, const std::filesystem::path& path);
UserProfile load_profile(const std::filesystem::path& path);

}  // namespace tdl
