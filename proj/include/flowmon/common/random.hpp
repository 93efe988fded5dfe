#pragma once

#include <cstddef>
#include <string>

namespace flowmon {

/// `bytes` bytes from the OS CSPRNG, lowercase hex encoded.
std::string random_hex(std::size_t bytes);

/// Uniform integer in [0, bound) from the CSPRNG.
std::uint64_t random_below(std::uint64_t bound);

bool is_hex(const std::string& s, std::size_t length);

}  // namespace flowmon
