#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace attackplan {

/// Machine-readable failure classes. The CLI maps each one to its own exit code.
enum class ErrorCategory {
  invalid_input,           // malformed files, unknown ids, violated type invariants
  model,                   // a well-formed input that cannot produce a valid model
  capacity,                // a configured size or enumeration cap was exceeded
  impossible_observation,  // Bayes update on a zero-probability observation
  internal,                // harness/simulator inconsistency
};

std::string_view to_string(ErrorCategory category) noexcept;
int exit_code(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace attackplan
