#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace strife {

enum class ErrorKind {
  kValidation,     // an input violates a documented invariant
  kConflict,       // the write clashes with existing state
  kNotFound,       // a referenced row or file does not exist
  kConfiguration,  // the requested operation cannot run with these settings
  kParse,          // malformed input file
  kClient,         // remote service failed after retries
  kFormat,         // remote response could not be interpreted
  kIo,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; the kind drives exit codes in the
// CLI and status codes in the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace strife
