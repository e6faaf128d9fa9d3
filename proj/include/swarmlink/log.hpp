#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace swarmlink {

/// Process-wide stderr logger. Level comes from SWARMLINK_LOG
/// (trace, debug, info, warn, error, off); default info.
spdlog::logger& log();

}  // namespace swarmlink
