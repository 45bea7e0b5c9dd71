#include "saldl/numeric_text.hpp"
#include "saldl/error.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace saldl {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_label: return "invalid-label";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::shape_error: return "shape-error";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::stratification_error: return "stratification-error";
    case ErrorKind::training_diverged: return "training-diverged";
    case ErrorKind::degenerate_embedding: return "degenerate-embedding";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::config_error: return "config-error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) {
    throw Error(ErrorKind::invalid_input, "cannot format floating-point value");
  }
  return std::string(buf.data(), end);
}

bool parse_double(std::string_view text, double& out) {
  // from_chars rejects a leading '+', which some writers emit.
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

bool parse_int(std::string_view text, int& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace saldl
