#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace glassbox {

// Base for every error the library raises on purpose. The CLI maps the
// concrete categories to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input could not be parsed (bad JSON, truncated binary, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

// Input parsed but violates a data invariant or a precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value (even blur window, non-dividing factor, ...).
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Operation requested in a state that cannot serve it (e.g. unfit normalizer).
class StateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

using WarningHandler = std::function<void(std::string_view)>;

// Non-fatal diagnostics (out-of-range kelvin, missing solar zenith, ...).
// The default handler prints to stderr.
void warn(std::string_view message);
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace glassbox
