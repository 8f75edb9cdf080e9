#pragma once

#include <spdlog/spdlog.h>

namespace mgrid::log {

/// Reads MGRID_LOG (debug|info|warn|error|off). Defaults to warn. Safe to call
/// repeatedly.
void init_from_env();

/// Shared stderr logger.
spdlog::logger& get();

}  // namespace mgrid::log
