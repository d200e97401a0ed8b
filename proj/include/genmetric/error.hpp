#pragma once

#include <stdexcept>
#include <string>

namespace genmetric {

/// Raised on violated preconditions and unrecoverable numerical failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace genmetric
