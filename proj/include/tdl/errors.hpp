#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tdl {

/// Base of every toolkit error. `kind()` is the stable machine-readable name
/// that the CLI puts in its JSON error payload.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message);
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define TDL_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  };

// signal_io
TDL_DEFINE_ERROR(ChannelCountError, "ChannelCountError")
TDL_DEFINE_ERROR(FormatError, "FormatError")
TDL_DEFINE_ERROR(CorruptFileError, "CorruptFileError")
TDL_DEFINE_ERROR(IoError, "IoError")
TDL_DEFINE_ERROR(FileNotFoundError, "FileNotFound")
// segmentation
TDL_DEFINE_ERROR(RateMismatchError, "RateMismatchError")
TDL_DEFINE_ERROR(InvalidAlignmentError, "InvalidAlignmentError")
TDL_DEFINE_ERROR(UnknownPhonemeError, "UnknownPhonemeError")
// tdoa
TDL_DEFINE_ERROR(DegenerateSignalError, "DegenerateSignalError")
TDL_DEFINE_ERROR(SegmentTooShortError, "SegmentTooShortError")
// geometry
TDL_DEFINE_ERROR(NoSolutionError, "NoSolutionError")
TDL_DEFINE_ERROR(UnderdeterminedError, "UnderdeterminedError")
TDL_DEFINE_ERROR(InvalidPoseError, "InvalidPoseError")
TDL_DEFINE_ERROR(NoEchoError, "NoEchoError")
// profiles
TDL_DEFINE_ERROR(AlignmentMismatchError, "AlignmentMismatchError")
TDL_DEFINE_ERROR(InsufficientTrialsError, "InsufficientTrialsError")
TDL_DEFINE_ERROR(SchemaError, "SchemaError")
// scoring
TDL_DEFINE_ERROR(SequenceMismatchError, "SequenceMismatchError")
TDL_DEFINE_ERROR(DegenerateSequenceError, "DegenerateSequenceError")
// simulator / evaluation / cli
TDL_DEFINE_ERROR(ScenarioError, "ScenarioError")
TDL_DEFINE_ERROR(EmptySetError, "EmptySetError")
TDL_DEFINE_ERROR(ConfigError, "ConfigError")
TDL_DEFINE_ERROR(PreconditionError, "PreconditionError")

#undef TDL_DEFINE_ERROR

class IncompleteInventoryError : public Error {
 public:
  explicit IncompleteInventoryError(std::vector<std::string> missing);
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

}  // namespace tdl
