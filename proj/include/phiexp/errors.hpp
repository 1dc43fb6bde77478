#pragma once

#include <stdexcept>
#include <string>

namespace phiexp {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Generator evaluation failed (non-finite input, bad table, ...).
class GeneratorError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematically valid domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numeric procedure failed to reach its accuracy target.
class NumericError : public Error {
public:
    NumericError(const std::string& msg, double achieved_error = -1.0)
        : Error(msg), achieved_error(achieved_error) {}
    double achieved_error;
};

/// Declared generator metadata disagrees with fitted behaviour.
class MetadataError : public Error {
public:
    using Error::Error;
};

/// Tail extrapolation could not decide convergence; carries both bracket ends.
class InconclusiveError : public Error {
public:
    InconclusiveError(const std::string& msg, double lo, double hi)
        : Error(msg), bracket_lo(lo), bracket_hi(hi) {}
    double bracket_lo;
    double bracket_hi;
};

/// Root bracketing scan exhausted its budget without a sign change.
class BracketError : public Error {
public:
    BracketError(const std::string& msg, double scanned_lo, double scanned_hi)
        : Error(msg), scanned_lo(scanned_lo), scanned_hi(scanned_hi) {}
    double scanned_lo;
    double scanned_hi;
};

/// Truncation radius budget exhausted before the tail criterion was met.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// Empirical covariance (or similar input) not positive definite.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Malformed matrix/vector input (asymmetry, dimension mismatch, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// Explicit time stepping collapsed below the step-size floor.
class StiffnessError : public Error {
public:
    using Error::Error;
};

/// The finite-volume update produced an invalid state.
class SchemeError : public Error {
public:
    using Error::Error;
};

/// Config file is syntactically or semantically invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace phiexp
