#pragma once

#include <stdexcept>
#include <string>

namespace iwpair {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input: bad problem files, out-of-domain arguments, inconsistent specs.
/// Carries the offending field name so front-ends can report it machine-readably.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Quadrature failed to converge; message carries the refinement trace.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Marching, truncation or fixed-point iteration failure; message carries diagnostics.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Boundary-slope identity requested in a regime where kappa is forced to zero
/// (infinite scale limit or divergent boundary criterion integral).
class KappaZeroRegime : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace iwpair
