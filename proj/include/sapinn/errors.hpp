#pragma once

#include <stdexcept>
#include <string>

namespace sapinn {

/// Malformed or incompatible checkpoint/config document.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A loss or objective evaluated to NaN/Inf.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical reference solver could not produce a field.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sapinn
