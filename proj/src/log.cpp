#include "flexmap/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace flexmap::log {

namespace {

Level parse_env() {
    const char* env = std::getenv("FLEXMAP_LOG");
    if (!env) return Level::warn;
    const std::string v(env);
    if (v == "error") return Level::error;
    if (v == "warn") return Level::warn;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
}

std::atomic<Level> g_level{parse_env()};
std::mutex g_mutex;

const char* tag(Level lvl) {
    switch (lvl) {
        case Level::error: return "error";
        case Level::warn: return "warn";
        case Level::info: return "info";
        case Level::debug: return "debug";
    }
    return "?";
}

}  // namespace

Level level() { return g_level.load(std::memory_order_relaxed); }
void set_level(Level lvl) { g_level.store(lvl, std::memory_order_relaxed); }

void write(Level lvl, const std::string& message) {
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << "[flexmap " << tag(lvl) << "] " << message << "\n";
}

}  // namespace flexmap::log
