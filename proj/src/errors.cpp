#include "tdl/errors.hpp"

#include <utility>

namespace tdl {

Error::Error(std::string kind, const std::string& message)
    : std::runtime_error(message), kind_(std::move(kind)) {}

namespace {
std::string join_missing(const std::vector<std::string>& missing) {
  std::string out = "inventory is missing phonemes:";
  for (const auto& m : missing) out += " " + m;
  return out;
}
}  // namespace

IncompleteInventoryError::IncompleteInventoryError(std::vector<std::string> missing)
    : Error("IncompleteInventoryError", join_missing(missing)), missing_(std::move(missing)) {}

}  // namespace tdl
