#pragma once

#include <stdexcept>
#include <string>

namespace dgcrf {

// Invalid argument or violated precondition (sizes, ranges).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File access and format problems.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization failures, non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched internal objects, e.g. a cache from another network.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dgcrf
