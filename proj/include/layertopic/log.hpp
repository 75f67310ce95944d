#pragma once

#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace layertopic {

// Shared library logger; writes to stderr so CLI stdout stays machine-readable.
inline std::shared_ptr<spdlog::logger> logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    if (auto existing = spdlog::get("layertopic")) return existing;
    auto created = spdlog::stderr_color_mt("layertopic");
    created->set_pattern("[%l] %v");
    return created;
  }();
  return instance;
}

}  // namespace layertopic
