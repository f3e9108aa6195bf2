#pragma once

#include <stdexcept>
#include <string>

namespace qcilab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain where the routine is defined or
/// where its result is representable.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A sampling grid is too coarse for the oscillation or cutoff scale it
/// is supposed to carry.
class ResolutionError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// A quadratic Hamiltonian has a (numerically) zero eigenvalue.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// An iterative or adaptive scheme did not reach its target accuracy.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double achieved)
        : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_error(achieved) {}

    double achieved_error;
};

class EmptyLadderError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration; names the offending field and constraint.
class ConfigError : public Error {
public:
    ConfigError(std::string field_name, const std::string& constraint)
        : Error("config field '" + field_name + "': " + constraint), field(std::move(field_name)) {}

    std::string field;
};

}  // namespace qcilab
