#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spraymet {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Syntax or name-resolution failure while parsing an expression.
// `position` is a 0-based byte offset into the source string.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// Evaluation left the admissible domain (sqrt/log of a non-positive
// value, division by zero, F evaluated where it is not positive, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A computation would need derivatives beyond total order 3 of some
// primitive field. Raised up front, never silently truncated.
class DepthBudgetError : public Error {
public:
    using Error::Error;
};

// The fundamental tensor failed its rank requirement at a point.
class DegenerateMetricError : public Error {
public:
    DegenerateMetricError(const std::string& message, std::vector<double> singular_values)
        : Error(message), singular_values_(std::move(singular_values)) {}

    const std::vector<double>& singular_values() const noexcept { return singular_values_; }

private:
    std::vector<double> singular_values_;
};

// A field that must be positively homogeneous of a fixed degree is not.
class HomogeneityError : public Error {
public:
    using Error::Error;
};

// Bad scenario/sampler/metric configuration: unresolved names, empty
// boxes, non-skew omega, |b| >= 1, and similar input mistakes.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace spraymet
