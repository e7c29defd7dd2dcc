#pragma once

#include <stdexcept>
#include <string>

namespace dsc {

// Raised for invalid arguments: dimension mismatches, out-of-range
// hyperparameters, malformed configuration.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a numerical routine fails (non-convergence, non-finite state).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ParameterError(what);
}

inline std::string dims(long rows, long cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace detail
}  // namespace dsc
