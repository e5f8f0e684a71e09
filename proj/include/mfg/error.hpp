#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: ragged arrays, non-finite values, empty populations.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Argument outside the operation's domain (time outside [0, T], n = 0, c <= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// 1 + psi (or 1 + E[theta*gamma/(1-gamma)]) numerically zero.
class SingularAggregateError : public Error {
public:
    using Error::Error;
};

/// Exponent or logarithm argument outside the representable range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// An ODE sweep produced a non-finite value.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, std::size_t knot)
        : Error(what + " (first bad knot " + std::to_string(knot) + ")"), knot_(knot) {}

    std::size_t knot() const noexcept { return knot_; }

private:
    std::size_t knot_;
};

}  // namespace mfg
