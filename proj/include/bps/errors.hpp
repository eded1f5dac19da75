#pragma once

#include <stdexcept>
#include <string>

namespace bps {

// Invalid run configuration (bad parameter values, inconsistent fields).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Argument outside an operation's domain (state index out of range,
// non-neighbor jump target, zero gradient at a reflection, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Model evaluation produced a non-finite value.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Chain state became non-finite during simulation.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A rate exceeded its envelope at a thinning proposal point.
struct DominanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data (trace files, reference samples, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bps
