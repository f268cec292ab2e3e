#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace decon {

enum class ErrorKind {
  io,        // unreadable/unwritable files
  schema,    // corpus or manifest records violating their schema
  format,    // binary embedding file violations
  config,    // engine config or policy invariant violations
  contract,  // internal precondition failures (bugs)
};

std::string_view to_string(ErrorKind kind);

/// Exception type for every engine failure. The kind drives the CLI exit code
/// and the "error" field of the JSON error object written to stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace decon
