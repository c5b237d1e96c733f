#pragma once

#include <stdexcept>

namespace ancl {

/// Invalid configuration, arguments, or preconditions (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input data (CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numeric failure, e.g. a non-finite intermediate (CLI exit code 4).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model-file load failures, each distinct so callers can react precisely.
struct ModelVersionError : DataError {
    using DataError::DataError;
};
struct ModelTruncationError : DataError {
    using DataError::DataError;
};
struct ModelChecksumError : DataError {
    using DataError::DataError;
};

}  // namespace ancl
