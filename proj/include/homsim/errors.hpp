#pragma once

#include <stdexcept>
#include <string>

namespace homsim {

/// Invalid parameters, preconditions, or configuration (CLI exit code 2).
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Mathematical domain violations (non-positive time constants, zero denominators).
class DomainError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// File system failures (CLI exit code 3).
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data such as a bad PTT header or unsorted records (CLI exit code 4).
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace homsim
