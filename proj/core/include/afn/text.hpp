#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace afn {

// Shortest round-trip decimal form of a 64-bit double (std::to_chars).
// All file output goes through this so repeated runs are byte-identical.
std::string fmt_double(double v);

std::vector<std::string_view> split_tabs(std::string_view line);

// Strict full-token parses; return false on trailing junk or empty input.
bool parse_double(std::string_view tok, double& out);
bool parse_int(std::string_view tok, long& out);

}  // namespace afn
