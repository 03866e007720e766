#pragma once

#include <stdexcept>

namespace bicameral {

// A call that would break a model contract, e.g. training a frozen
// language component or training the Doppelgänger on an unfrozen one.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Training produced a non-finite loss.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bicameral
