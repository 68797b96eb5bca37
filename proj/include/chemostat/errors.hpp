#pragma once

#include <stdexcept>
#include <string>

namespace chemostat {

/// Bad configuration: dimension mismatches, schema violations, invalid
/// parameter values. Maps to CLI exit status 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input outside an operation's mathematical domain (reducible matrix,
/// infinite break-even, no coexistence regime). Maps to CLI exit status 3.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure: solver non-convergence, step-size underflow, NaN,
/// failed internal consistency check. Maps to CLI exit status 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace chemostat
