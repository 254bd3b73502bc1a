#pragma once

#include <stdexcept>

namespace vulnmine {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input file (schema violation, duplicate id, ...).
class LoadError : public Error {
public:
    using Error::Error;
};

// Invalid configuration values or missing configuration entries.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Invalid arguments to an algorithm (k out of range, single cluster, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace vulnmine
