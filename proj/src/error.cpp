#include "attackplan/error.hpp"

namespace attackplan {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::invalid_input: return "invalid_input";
    case ErrorCategory::model: return "model";
    case ErrorCategory::capacity: return "capacity";
    case ErrorCategory::impossible_observation: return "impossible_observation";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::invalid_input: return 2;
    case ErrorCategory::model: return 3;
    case ErrorCategory::capacity: return 4;
    case ErrorCategory::impossible_observation: return 5;
    case ErrorCategory::internal: return 6;
  }
  return 6;
}

}  // namespace attackplan
