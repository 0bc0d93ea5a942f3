#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace fedsim::log {

enum Level { kError = 0, kInfo = 1, kDebug = 2 };

// Controlled by FEDSIM_LOG = error|info|debug (default info).
inline Level level() {
  static Level lvl = [] {
    const char* env = std::getenv("FEDSIM_LOG");
    if (env == nullptr) return kInfo;
    if (std::strcmp(env, "error") == 0) return kError;
    if (std::strcmp(env, "debug") == 0) return kDebug;
    return kInfo;
  }();
  return lvl;
}

template <typename... Args>
void error(const char* fmt, Args... args) {
  std::fprintf(stderr, "[error] ");
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

template <typename... Args>
void info(const char* fmt, Args... args) {
  if (level() < kInfo) return;
  std::fprintf(stderr, "[info] ");
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

template <typename... Args>
void debug(const char* fmt, Args... args) {
  if (level() < kDebug) return;
  std::fprintf(stderr, "[debug] ");
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

}  // namespace fedsim::log
