#pragma once

#include <stdexcept>
#include <string>

namespace hw {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: malformed expression, non-prime characteristic, wrong field.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A precision or denominator budget was exhausted.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// A computed result failed an invariant that should hold mathematically.
class VerificationError : public Error {
public:
    using Error::Error;
};

}  // namespace hw
