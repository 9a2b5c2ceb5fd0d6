#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace replisim::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

// REPLISIM_LOG={error|info|debug}; defaults to error.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("REPLISIM_LOG");
    const std::string_view v = env ? env : "";
    if (v == "debug") return Level::Debug;
    if (v == "info") return Level::Info;
    return Level::Error;
  }();
  return level;
}

inline void write(Level lvl, std::string_view msg) {
  if (lvl > threshold()) return;
  static std::mutex mu;
  const std::lock_guard lock(mu);
  static constexpr const char* names[] = {"error", "info", "debug"};
  std::cerr << "[replisim " << names[static_cast<int>(lvl)] << "] " << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::Error, msg); }
inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void debug(std::string_view msg) { write(Level::Debug, msg); }

}  // namespace replisim::log
