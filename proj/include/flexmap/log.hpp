#pragma once

#include <sstream>
#include <string>

namespace flexmap::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Initialized from FLEXMAP_LOG (error|warn|info|debug); defaults to warn.
Level level();
void set_level(Level lvl);

void write(Level lvl, const std::string& message);

template <typename... Args>
void emit(Level lvl, Args&&... args) {
    if (lvl > level()) return;
    std::ostringstream os;
    (os << ... << args);
    write(lvl, os.str());
}

}  // namespace flexmap::log

#define FLEXMAP_LOG_ERROR(...) ::flexmap::log::emit(::flexmap::log::Level::error, __VA_ARGS__)
#define FLEXMAP_LOG_WARN(...) ::flexmap::log::emit(::flexmap::log::Level::warn, __VA_ARGS__)
#define FLEXMAP_LOG_INFO(...) ::flexmap::log::emit(::flexmap::log::Level::info, __VA_ARGS__)
#define FLEXMAP_LOG_DEBUG(...) ::flexmap::log::emit(::flexmap::log::Level::debug, __VA_ARGS__)
