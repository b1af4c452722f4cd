#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcs {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct InsufficientSamples : Error {
    using Error::Error;
};

struct NotPositiveDefinite : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct AbsentClass : Error {
    using Error::Error;
};

/// CSV parse failure; carries the zero-based row/column of the offending cell.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t row, std::size_t col)
        : Error(msg + " (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
          row(row),
          col(col) {}

    std::size_t row;
    std::size_t col;
};

} // namespace rcs
