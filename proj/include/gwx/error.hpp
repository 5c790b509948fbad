#pragma once

#include <stdexcept>
#include <string>

namespace gwx {

// Base for every error the toolkit raises. The CLI maps the two families
// below onto exit codes 2 (validation) and 3 (numerical degeneracy).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: malformed files, out-of-range windows, shape mismatches,
// invalid parameters.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line)
    : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParameterError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Input is well-formed but the computation has no meaningful answer
// (zero energy, zero PSD, autocorrelation that never decays, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

}    // namespace gwx
