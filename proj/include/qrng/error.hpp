#pragma once

#include <stdexcept>
#include <string>

namespace qrng {

/// A parameter is outside the domain the model is defined on.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller used an operation in a mode it does not support.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Normalization of a statistic has a zero denominator (e.g. a constant stream).
class UndefinedNormalization : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidParameter(message);
}

}  // namespace detail
}  // namespace qrng
