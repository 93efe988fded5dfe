#include "flowmon/broker/topic.hpp"

namespace flowmon::broker {

namespace {

bool valid_level(std::string_view level) {
  if (level.empty()) return false;
  for (char c : level) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string_view> split_levels(std::string_view topic) {
  std::vector<std::string_view> levels;
  std::size_t start = 0;
  while (true) {
    const std::size_t slash = topic.find('/', start);
    if (slash == std::string_view::npos) {
      levels.push_back(topic.substr(start));
      return levels;
    }
    levels.push_back(topic.substr(start, slash - start));
    start = slash + 1;
  }
}

bool valid_topic(std::string_view topic) {
  if (topic.empty()) return false;
  for (auto level : split_levels(topic)) {
    if (!valid_level(level)) return false;
  }
  return true;
}

bool valid_filter(std::string_view filter) {
  if (filter.empty()) return false;
  const auto levels = split_levels(filter);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == "+") continue;
    if (levels[i] == "#") {
      if (i + 1 != levels.size()) return false;
      continue;
    }
    if (!valid_level(levels[i])) return false;
  }
  return true;
}

bool topic_matches(std::string_view filter, std::string_view topic) {
  const auto f = split_levels(filter);
  const auto t = split_levels(topic);
  std::size_t i = 0;
  for (; i < f.size(); ++i) {
    if (f[i] == "#") return true;
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return i == t.size();
}

}  // namespace flowmon::broker
