#pragma once

#include <stdexcept>
#include <string>

namespace faec {

// Shape mismatches, out-of-range settings, inconsistent model/config pairs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation precondition (e.g. transmitter output outside [0, 1]).
class ContractError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// NaN/Inf showed up in a loss or gradient.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, truncated or incompatible files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace faec
