#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spatiocorr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based row (line) number, header = row 1.
class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& message)
        : Error("row " + std::to_string(row) + ": " + message), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Numerically degenerate data (zero variance, perfect conditioning, ...).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

} // namespace spatiocorr
