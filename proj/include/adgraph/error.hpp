#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adgraph {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or unreadable input data. The CLI maps these to exit code 1.
class InputError : public Error {
public:
    using Error::Error;
};

// Structurally invalid file (HAR without entries, malformed CSV row, ...).
class FormatError : public InputError {
public:
    FormatError(const std::string& what, std::size_t line = 0)
        : InputError(line == 0 ? what : what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CanonicalizationError : public InputError {
public:
    using InputError::InputError;
};

// Not enough (or not varied enough) data for a statistical procedure.
class InsufficientData : public InputError {
public:
    using InputError::InputError;
};

// Violated precondition on a parameter. The CLI maps these to exit code 2.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace adgraph
