#pragma once

#include <stdexcept>
#include <string>

namespace qkdplan {

// Bad input: malformed files, invalid parameters, guard limits on problem
// size. The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The solver cannot produce a result for a well-formed instance: unreachable
// node pairs, enumeration limits hit mid-solve. CLI exit code 3.
struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qkdplan
