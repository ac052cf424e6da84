#pragma once

#include <cstdlib>
#include <string>

#include <spdlog/spdlog.h>

namespace hyperwalk {

/// Applies HYPERWALK_LOG (trace|debug|info|warn|error|critical|off) to the
/// default logger. Unset leaves spdlog's default (info).
inline void init_logging_from_env() {
  if (const char* level = std::getenv("HYPERWALK_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace hyperwalk
