#pragma once

#include <stdexcept>
#include <string>

namespace mpm {

// Bad or malformed input (files, schemas, dimension mismatches). CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-convergence, separation, rank deficiency). CLI exit code 3.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

// Refused because a documented precondition is not met (e.g. too few subjects
// for smoothing). CLI exit code 4.
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace mpm
