#pragma once

#include <stdexcept>
#include <string>

namespace kalls {

// Raised for out-of-range parameters, dimension mismatches and malformed input.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& msg) : std::invalid_argument(msg) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

}  // namespace detail
}  // namespace kalls
