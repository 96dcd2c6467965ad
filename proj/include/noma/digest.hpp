#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace noma {

// 64-bit FNV-1a, rendered as 16 lowercase hex digits. Used for config
// fingerprints stored alongside datasets and checkpoints.
std::string fnv1a_hex(std::string_view text);

// Shortest decimal that round-trips to the same double, always with '.' as
// the decimal separator.
std::string format_double(double value);

}  // namespace noma
