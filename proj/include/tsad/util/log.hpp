#pragma once

#include <chrono>
#include <iostream>
#include <mutex>
#include <string_view>

namespace tsad::log {

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

inline bool& quiet() {
  static bool q = false;
  return q;
}

/// Progress lines go to stderr so stdout and output files stay machine-readable.
inline void info(std::string_view msg) {
  if (quiet()) return;
  std::lock_guard lock(sink_mutex());
  std::cerr << "[tsad] " << msg << '\n';
}

inline void warn(std::string_view msg) {
  std::lock_guard lock(sink_mutex());
  std::cerr << "[tsad] warning: " << msg << '\n';
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace tsad::log
