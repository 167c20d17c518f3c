#pragma once

#include <stdexcept>
#include <string>

namespace narrative {

/// Raised for invalid input data, malformed files and violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace narrative
