#pragma once

#include <stdexcept>
#include <string>

namespace tnlab {

/// Rejected input: malformed parameters, non-finite data, grid mismatch.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A time integration aborted (blow-up, non-finite state).
class SolverAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tnlab
