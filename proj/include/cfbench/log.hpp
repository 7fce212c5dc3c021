#pragma once

#include <string_view>

#include <fmt/format.h>

namespace cfbench {

// Progress messages go to stderr. Silenced when CFBENCH_QUIET is set.
bool log_enabled();

template <class... Args>
void log_info(fmt::format_string<Args...> format, Args&&... args) {
  if (!log_enabled()) return;
  fmt::print(stderr, "[cfbench] {}\n", fmt::format(format, std::forward<Args>(args)...));
}

}  // namespace cfbench
