#pragma once

#include <stdexcept>
#include <string>

namespace drs {

// Bad input from the outside world (files, flags, config). The CLI maps
// this to exit code 2; everything else derived from std::exception is an
// internal invariant failure and maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace drs
