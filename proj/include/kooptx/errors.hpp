#pragma once

#include <stdexcept>
#include <string>

namespace kooptx {

// Config problems (bad flag values, malformed config JSON, invalid
// hyperparameters). CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Data problems (unreadable files, malformed CSV, signals too short for the
// requested operation, degenerate inputs). CLI maps these to exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures that indicate a bug or an ill-posed fit rather than bad
// user input (non-finite values mid-computation, diverging training loss).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kooptx
