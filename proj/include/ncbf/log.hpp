#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace ncbf {

enum class LogLevel { quiet = 0, warn = 1, info = 2, debug = 3 };

/// Process-wide counters for numerical events worth surfacing in run summaries.
struct EventCounters {
  std::atomic<long> tikhonov{0};
  std::atomic<long> branch_fallback{0};
  std::atomic<long> filter_infeasible{0};
  std::atomic<long> gradient_fallback{0};

  void reset() {
    tikhonov = 0;
    branch_fallback = 0;
    filter_infeasible = 0;
    gradient_fallback = 0;
  }
};

inline EventCounters& event_counters() {
  static EventCounters c;
  return c;
}

inline std::atomic<int>& log_level_storage() {
  static std::atomic<int> level{static_cast<int>(LogLevel::warn)};
  return level;
}

inline void set_log_level(LogLevel l) { log_level_storage() = static_cast<int>(l); }
inline LogLevel log_level() { return static_cast<LogLevel>(log_level_storage().load()); }

inline void log_message(LogLevel l, const std::string& msg) {
  if (static_cast<int>(l) > log_level_storage().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const char* tag = l == LogLevel::warn ? "warn" : l == LogLevel::info ? "info" : "debug";
  std::cerr << "[ncbf " << tag << "] " << msg << "\n";
}

}  // namespace ncbf
