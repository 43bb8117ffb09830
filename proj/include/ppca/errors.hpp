#pragma once

#include <stdexcept>
#include <string>

namespace ppca {

/// Malformed input files or records.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

/// Inputs violating a documented precondition or type invariant.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Estimators that cannot produce a value from the given sample.
class estimation_error : public std::runtime_error {
public:
    explicit estimation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Failures while generating synthetic data (e.g. exploding cell means).
class sampling_error : public std::runtime_error {
public:
    explicit sampling_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ppca
