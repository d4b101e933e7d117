#pragma once

#include <functional>
#include <string>

namespace sgame {

/// Receives warnings (cache corruption, skipped records). Defaults to stderr.
using LogSink = std::function<void(const std::string&)>;

void set_warning_sink(LogSink sink);
void warn(const std::string& message);

}  // namespace sgame
