#pragma once

#include <stdexcept>
#include <string>

namespace mff {

// bad user input: malformed config, weights out of range, invalid digits
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// a request whose exact evaluation exceeds the enumeration budget
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// an operation that has no solution for the given weights (flat tilts etc.)
struct degeneracy_error : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace mff
