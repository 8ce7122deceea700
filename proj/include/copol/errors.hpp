#pragma once

#include <stdexcept>
#include <string>

namespace copol {

/// Malformed configuration, policy file, or command-line input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not meet its tolerance. Carries the
/// offending residual so callers can report it.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& msg, double residual)
        : std::runtime_error(msg + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace copol
