#include "curbflow/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace curbflow::log {
namespace {

Level parse_env() {
    const char* raw = std::getenv("CURBFLOW_LOG");
    if (raw == nullptr) {
        return Level::warn;
    }
    const std::string value(raw);
    if (value == "error") return Level::error;
    if (value == "info") return Level::info;
    if (value == "debug") return Level::debug;
    return Level::warn;
}

std::atomic<int>& level_slot() {
    static std::atomic<int> slot{static_cast<int>(parse_env())};
    return slot;
}

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

constexpr std::string_view tag(Level level) {
    switch (level) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
    }
    return "?";
}

} // namespace

Level threshold() { return static_cast<Level>(level_slot().load(std::memory_order_relaxed)); }

void set_threshold(Level level) { level_slot().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
    std::lock_guard lock(sink_mutex());
    std::cerr << "[curbflow " << tag(level) << "] " << message << '\n';
}

} // namespace curbflow::log
