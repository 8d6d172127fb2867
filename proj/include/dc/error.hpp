#pragma once

#include <stdexcept>
#include <string>

namespace dc {

// Raised when a caller violates a precondition: bad shapes, out-of-range
// parameters, malformed files. The message names the offending values.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an iterative routine fails to converge or a computation
// produces non-finite values. Carries enough context to locate the failure.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dc
