#pragma once

#include <sstream>
#include <string>

// Thin front end over spdlog. The backend lives in its own translation unit
// because libtorch bundles an fmt release that the system spdlog cannot use.

namespace tetgan::log {

enum class Level { debug, info, warn, error, off };

void emit(Level level, const std::string& message);
void set_level(Level level);
/// Parses debug|info|warn|error|off.
Level parse_level(const std::string& name);

template <typename... Parts>
std::string concat(const Parts&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}

template <typename... Parts>
void info(const Parts&... parts) {
  emit(Level::info, concat(parts...));
}

template <typename... Parts>
void warn(const Parts&... parts) {
  emit(Level::warn, concat(parts...));
}

}  // namespace tetgan::log
