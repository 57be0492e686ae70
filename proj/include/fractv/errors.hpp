#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fractv {

/// Parameter outside the admissible range (alpha, sizes, weights).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Operand dimensions do not agree.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative method stopped without meeting its tolerance, or broke down.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_value)
        : std::runtime_error(what), last_value_(last_value) {}

    /// Last iterate of the monitored quantity (estimate, residual, ...).
    double last_value() const noexcept { return last_value_; }

private:
    double last_value_;
};

/// Malformed or unsupported raster file.
class PgmError : public std::runtime_error {
public:
    PgmError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fractv
