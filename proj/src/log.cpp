#include "mgrid/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>
#include <string>

namespace mgrid::log {

namespace {

std::shared_ptr<spdlog::logger> make_logger() {
    auto logger = spdlog::stderr_color_mt("mgrid");
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::warn);
    return logger;
}

std::shared_ptr<spdlog::logger>& instance() {
    static std::shared_ptr<spdlog::logger> logger = make_logger();
    return logger;
}

}  // namespace

void init_from_env() {
    const char* env = std::getenv("MGRID_LOG");
    if (env == nullptr) return;
    const std::string level(env);
    if (level == "debug") {
        instance()->set_level(spdlog::level::debug);
    } else if (level == "info") {
        instance()->set_level(spdlog::level::info);
    } else if (level == "warn") {
        instance()->set_level(spdlog::level::warn);
    } else if (level == "error") {
        instance()->set_level(spdlog::level::err);
    } else if (level == "off") {
        instance()->set_level(spdlog::level::off);
    }
}

spdlog::logger& get() { return *instance(); }

}  // namespace mgrid::log
