#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace flowmon::broker {

// Topic levels are `/`-separated, non-empty and drawn from [A-Za-z0-9_-].
// Filters may additionally use `+` for exactly one level and a trailing `#`
// for any suffix (including none).

bool valid_topic(std::string_view topic);
bool valid_filter(std::string_view filter);

std::vector<std::string_view> split_levels(std::string_view topic);

/// Iterative single-pass matcher; both arguments must already be valid.
bool topic_matches(std::string_view filter, std::string_view topic);

}  // namespace flowmon::broker
