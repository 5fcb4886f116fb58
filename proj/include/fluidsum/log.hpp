#pragma once

#include <cstdarg>
#include <cstdint>

namespace fluidsum {

// Minimal stderr logger. Verbosity comes from the FLUID_LOG environment
// variable (trace|debug|info|warn|error, default warn), read once.
enum class LogLevel : uint8_t { trace = 0, debug, info, warn, error, off };

LogLevel log_threshold();
void log_message(LogLevel level, const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 2, 3)))
#endif
    ;

#define FLUIDSUM_LOG(level, ...)                                        \
  do {                                                                  \
    if (static_cast<int>(level) >= static_cast<int>(::fluidsum::log_threshold())) \
      ::fluidsum::log_message(level, __VA_ARGS__);                      \
  } while (0)

#define LOG_TRACE(...) FLUIDSUM_LOG(::fluidsum::LogLevel::trace, __VA_ARGS__)
#define LOG_DEBUG(...) FLUIDSUM_LOG(::fluidsum::LogLevel::debug, __VA_ARGS__)
#define LOG_INFO(...) FLUIDSUM_LOG(::fluidsum::LogLevel::info, __VA_ARGS__)
#define LOG_WARN(...) FLUIDSUM_LOG(::fluidsum::LogLevel::warn, __VA_ARGS__)
#define LOG_ERROR(...) FLUIDSUM_LOG(::fluidsum::LogLevel::error, __VA_ARGS__)

}  // namespace fluidsum
