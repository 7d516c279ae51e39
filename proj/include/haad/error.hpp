#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace haad {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape, scalar-ness, ranges).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public ContractViolation {
public:
    using ContractViolation::ContractViolation;
};

/// Invalid configuration value (negative weight, empty class, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity showed up where a finite value is required.
class NumericFault : public Error {
public:
    NumericFault(const std::string& what, std::ptrdiff_t where = -1)
        : Error(what), where_(where) {}

    /// Node index, step index or parameter position, -1 when not applicable.
    std::ptrdiff_t where() const noexcept { return where_; }

private:
    std::ptrdiff_t where_;
};

/// A metric is undefined for its input (e.g. AUC with a single class).
class MetricError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace haad
