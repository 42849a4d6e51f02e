#pragma once

#include <stdexcept>

namespace grusin {

/// Input data violates a structural assumption (e.g. non-monotone volumes).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A method was asked to handle more unknowns than its guard allows.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation's documented precondition does not hold.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace grusin
