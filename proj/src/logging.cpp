#include "stagewise/logging.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace stagewise {

std::shared_ptr<spdlog::logger> logger() {
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto existing = spdlog::get("stagewise");
        if (existing) return existing;
        auto l = spdlog::stderr_color_mt("stagewise");
        l->set_level(spdlog::level::warn);
        return l;
    }();
    return instance;
}

}  // namespace stagewise
