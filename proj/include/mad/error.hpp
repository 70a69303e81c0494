#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace mad {

/// Failure categories. Each maps onto one CLI exit code.
enum class ErrorKind {
  kBadInput,    // malformed arguments, files, or parameters
  kNumerical,   // divergence, singular correction, non-finite values
  kValidation,  // an oracle cross-check disagreed
};

/// The single exception type thrown by the library. `context` carries the
/// offending values (step index, gamma, file path, ...) as JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, nlohmann::json context = nlohmann::json::object());

  ErrorKind kind() const noexcept { return kind_; }
  const nlohmann::json& context() const noexcept { return context_; }

  /// {code, message, context}
  nlohmann::json to_json() const;

 private:
  ErrorKind kind_;
  nlohmann::json context_;
};

int exit_code(ErrorKind kind) noexcept;
const char* error_code_name(ErrorKind kind) noexcept;

[[noreturn]] void throw_bad_input(const std::string& message, nlohmann::json context = nlohmann::json::object());
[[noreturn]] void throw_numerical(const std::string& message, nlohmann::json context = nlohmann::json::object());

}  // namespace mad
