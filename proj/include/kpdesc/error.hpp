#pragma once

#include <stdexcept>

namespace kpd {

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the numerically supported range (Bessel order, kappa, ...).
struct RangeError : Error {
    using Error::Error;
};

// Value outside the domain a kernel or transform is defined on.
struct DomainError : Error {
    using Error::Error;
};

// Malformed or unsupported file contents.
struct FormatError : Error {
    using Error::Error;
};

// Input with no meaningful result (constant patch, zero vector, exact mean).
struct DegenerateInputError : Error {
    using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
    using Error::Error;
};

}  // namespace kpd
