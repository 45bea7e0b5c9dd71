#pragma once

#include <string>
#include <string_view>

namespace saldl {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Strict full-string parse; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, int& out);

}  // namespace saldl
