#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace saldl {

enum class ErrorKind {
  invalid_parameter,
  invalid_label,
  invalid_input,
  shape_error,
  empty_input,
  parse_error,
  stratification_error,
  training_diverged,
  degenerate_embedding,
  io_error,
  config_error,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. `kind()` is the machine-readable
/// category; `what()` carries the human-readable detail, prefixed by the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// The detail without the kind prefix, for re-raising with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace saldl
