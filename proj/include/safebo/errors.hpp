#pragma once

#include <stdexcept>
#include <string>

namespace safebo {

/// Bad input to a library call (dimension mismatch, non-positive parameter, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Floating-point failure that indicates an ill-conditioned solve.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation called on a state that violates its preconditions (e.g. empty safe set).
class InvalidStateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace safebo
