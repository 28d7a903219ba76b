#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace stagewise {

// Shared engine logger ("stagewise"). Tests swap its sinks to capture output.
std::shared_ptr<spdlog::logger> logger();

}  // namespace stagewise
