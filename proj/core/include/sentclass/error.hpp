#pragma once

#include <stdexcept>
#include <string>

namespace sentclass {

// Fatal data/config error. The CLI maps this to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

}  // namespace sentclass
