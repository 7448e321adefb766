#ifndef OSCLAIMS_ERRORS_HPP
#define OSCLAIMS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace osclaims {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A documented precondition or type invariant was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A severity or structure moment required by the computation does not exist.
class InfiniteMoment : public Error {
public:
    using Error::Error;
};

// The arrival process carries no mass on [0, t] (cumulative intensity is zero).
class DegenerateProcess : public Error {
public:
    using Error::Error;
};

// Quadrature or series truncation did not reach the requested accuracy.
class NumericFailure : public Error {
public:
    NumericFailure(const std::string& what, double residual)
        : Error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace osclaims

#endif
