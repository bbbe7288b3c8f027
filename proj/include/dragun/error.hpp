#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dragun {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed records, invariant violations, integrity failures.
class DataError : public Error {
public:
    using Error::Error;
};

/// A malformed line in a line-oriented input (JSONL, CSV). Line numbers are 1-based.
class ParseError : public DataError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Missing or invalid configuration (unknown keys, absent API key, bad ranges).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures: missing files, unwritable directories, bad index headers.
class IoError : public Error {
public:
    using Error::Error;
};

/// A model or scorer endpoint could not be reached or kept failing after retries.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int status) : Error(what), status_(status) {}

    /// Last HTTP status seen, or 0 when no response arrived.
    int status() const noexcept { return status_; }

private:
    int status_;
};

}  // namespace dragun
