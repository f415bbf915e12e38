#pragma once

#include <stdexcept>
#include <string>

namespace csl {

// Precondition violations (bad sizes, bad parameter ranges, malformed config)
// derive from std::invalid_argument; runtime failures of the numerics derive
// from std::runtime_error.  The CLI maps the former to exit code 1 and the
// latter to exit code 2.

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

class RepresentationMismatch : public std::invalid_argument {
public:
    explicit RepresentationMismatch(const std::string& what) : std::invalid_argument(what) {}
};

class StepTooLarge : public std::runtime_error {
public:
    explicit StepTooLarge(const std::string& what) : std::runtime_error(what) {}
};

class ZeroNorm : public std::runtime_error {
public:
    explicit ZeroNorm(const std::string& what) : std::runtime_error(what) {}
};

class NumericalAbort : public std::runtime_error {
public:
    explicit NumericalAbort(const std::string& what) : std::runtime_error(what) {}
};

} // namespace csl
