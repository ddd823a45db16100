#pragma once

#include <stdexcept>
#include <string>

namespace sqz {

// Input outside the mathematical domain of a model (above threshold, log of a
// non-positive ratio, closed lossless cavity, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent arguments (unsorted grids, empty data, bad bounds).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure inside an estimator (non-finite residuals).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sqz
