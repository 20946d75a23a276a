#pragma once

#include <stdexcept>
#include <string>

namespace ftlab {

/// Invalid configuration: bad law parameters, malformed operator blocks,
/// unknown benchmark names, unknown config keys.
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// An argument outside the documented domain of an operation.
class DomainError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine that failed to converge or produced non-finite data.
class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// A sequence tail that cannot be certified summable at the requested
/// truncation.
class TailError : public DomainError {
   public:
    using DomainError::DomainError;
};

/// Broken internal invariant.
class InternalError : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

}  // namespace ftlab
