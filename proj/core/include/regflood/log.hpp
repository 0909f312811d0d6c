#pragma once

#include <string_view>

namespace regflood::log {

// Thin wrappers so public headers do not pull in spdlog. Verbosity comes from
// the REGFLOOD_LOG environment variable (off, error, warn, info, debug);
// default is warn.
void warn(std::string_view message);
void info(std::string_view message);
void debug(std::string_view message);

}  // namespace regflood::log
