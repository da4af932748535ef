#pragma once

#include <stdexcept>
#include <string>

namespace volatil {

// Bad user input; raised before any sampling starts.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Broken internal invariant. Indicates a bug, not a user error.
class internal_error : public std::runtime_error {
public:
    explicit internal_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace volatil
