#include "sgame/log.hpp"

#include <iostream>
#include <mutex>

namespace sgame {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& sink() {
  static LogSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

void set_warning_sink(LogSink s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink() = s ? std::move(s) : [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink()(message);
}

}  // namespace sgame
