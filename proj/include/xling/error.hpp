#pragma once

#include <stdexcept>
#include <string>

namespace xling {

// Bad or inconsistent input (files, flags, malformed tables). CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failure during an otherwise well-posed computation. CLI exit code 3.
class ComputeError : public std::runtime_error {
public:
    explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace xling
