#pragma once

#include <stdexcept>
#include <string>

namespace pdm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller handed in something that violates an operation's precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Data is well-formed but numerically degenerate (zero variance, singular design).
class DegenerateData : public Error {
public:
    using Error::Error;
};

/// Training diverged or produced non-finite values.
class TrainingFailure : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration (unknown key, bad value).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace pdm
