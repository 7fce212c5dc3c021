#include "cfbench/log.hpp"

#include <cstdlib>

namespace cfbench {

bool log_enabled() {
  static const bool enabled = std::getenv("CFBENCH_QUIET") == nullptr;
  return enabled;
}

}  // namespace cfbench
