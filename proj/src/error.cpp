#include "mad/error.hpp"

namespace mad {

Error::Error(ErrorKind kind, const std::string& message, nlohmann::json context)
    : std::runtime_error(message), kind_(kind), context_(std::move(context)) {}

nlohmann::json Error::to_json() const {
  return {{"code", error_code_name(kind_)}, {"message", what()}, {"context", context_}};
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kValidation:
      return 2;
    case ErrorKind::kNumerical:
      return 3;
    case ErrorKind::kBadInput:
      return 4;
  }
  return 1;
}

const char* error_code_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kValidation:
      return "validation_failure";
    case ErrorKind::kNumerical:
      return "numerical_failure";
    case ErrorKind::kBadInput:
      return "bad_input";
  }
  return "unknown";
}

void throw_bad_input(const std::string& message, nlohmann::json context) {
  throw Error(ErrorKind::kBadInput, message, std::move(context));
}

void throw_numerical(const std::string& message, nlohmann::json context) {
  throw Error(ErrorKind::kNumerical, message, std::move(context));
}

}  // namespace mad
