#pragma once

#include <stdexcept>
#include <string>

namespace spikewalk {

// A caller broke a documented precondition (wrong dimensions, stepping an
// absorbed walker, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A numeric routine could not produce a result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spikewalk
