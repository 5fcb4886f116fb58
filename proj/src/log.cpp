#include "fluidsum/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace fluidsum {

namespace {

LogLevel parse_level(const char* s) {
  if (!s || !*s) return LogLevel::warn;
  if (!strcmp(s, "trace")) return LogLevel::trace;
  if (!strcmp(s, "debug")) return LogLevel::debug;
  if (!strcmp(s, "info")) return LogLevel::info;
  if (!strcmp(s, "warn")) return LogLevel::warn;
  if (!strcmp(s, "error")) return LogLevel::error;
  if (!strcmp(s, "off")) return LogLevel::off;
  return LogLevel::warn;
}

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::trace: return "trace";
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    default: return "off";
  }
}

std::mutex g_log_mutex;

}  // namespace

LogLevel log_threshold() {
  static LogLevel level = parse_level(std::getenv("FLUID_LOG"));
  return level;
}

void log_message(LogLevel level, const char* fmt, ...) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  fprintf(stderr, "[fluidsum %s] ", level_name(level));
  va_list args;
  va_start(args, fmt);
  vfprintf(stderr, fmt, args);
  va_end(args);
  fputc('\n', stderr);
}

}  // namespace fluidsum
