#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace infheat {

/// Malformed or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A time integration produced non-finite or runaway values (CLI exit code 3).
class NumericalAbort : public std::runtime_error {
public:
    NumericalAbort(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace infheat
