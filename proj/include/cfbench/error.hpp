#pragma once

#include <stdexcept>
#include <string>

namespace cfbench {

// Single exception type for all recoverable failures in the library. The
// message is meant for humans; callers that need to branch do so on the
// operation that threw, not on the text.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cfbench
