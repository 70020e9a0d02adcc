#pragma once

#include <stdexcept>
#include <string>

namespace hdloa {

// Base for every failure the library reports. The CLI maps the subclasses
// onto process exit codes (config 1, data 2, backend 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// A caller violated a documented precondition (n = 0, empty role list, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

// Network-level or HTTP failure. `transient` drives the retry loop:
// timeouts, resets, 429 and 5xx are transient; everything else is not.
class TransportError : public BackendError {
public:
    TransportError(const std::string& what, bool transient, int status = 0)
        : BackendError(what), transient_(transient), status_(status) {}

    bool transient() const noexcept { return transient_; }
    int status() const noexcept { return status_; }

private:
    bool transient_;
    int status_;
};

// A mock backend was asked for a prompt its script does not cover.
class ScriptError : public BackendError {
public:
    using BackendError::BackendError;
};

}  // namespace hdloa
