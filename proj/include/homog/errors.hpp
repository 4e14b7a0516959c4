#pragma once

#include <stdexcept>
#include <string>

namespace homog {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied parameters (bad law, L > N, mu <= 0, malformed config...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of an operation (edge outside a box, y <= 0 in a log fit).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The operation is not defined for this environment structure.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Conjugate gradient hit its iteration cap.
class SolverError : public Error {
public:
    SolverError(const std::string& what, int iterations, double residual)
        : Error(what), iterations_(iterations), residual_(residual) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

}  // namespace homog
