#pragma once

#include <stdexcept>
#include <string>

namespace sgdd {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside its mathematical domain (negative sigma, eta <= 0, t outside [0,1], ...).
struct DomainError : Error {
    using Error::Error;
};

// Sequences or pmfs of mismatched length/support.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid run configuration (bad key, missing field, nonpositive iteration count, ...).
struct ConfigError : Error {
    using Error::Error;
};

// An enumeration-requiring operation was asked to exceed its state budget.
struct BudgetError : Error {
    using Error::Error;
};

// Non-finite intermediate value where the algorithm cannot proceed.
struct NumericError : Error {
    using Error::Error;
};

// Joint prior assigns zero mass to the current state; score ratios undefined.
struct DegenerateStateError : Error {
    using Error::Error;
};

} // namespace sgdd
