#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace coadapt {

// Shortest round-trip decimal form; stable across runs.
std::string format_double(double value);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace coadapt
