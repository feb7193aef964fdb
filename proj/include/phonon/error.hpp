#pragma once

#include <stdexcept>
#include <string>

namespace phonon {

/// Base class for failures raised by the simulation engine.
class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Population reached the edge of the Fock truncation beyond the allowed policy.
class TruncationError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Fixed-step integration could not meet its error bound.
class IntegrationError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Least-squares fit did not converge.
class FitError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Malformed or inconsistent user configuration. `key` names the offending entry when known.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string &message)
        : std::runtime_error(message), key_(std::move(key)) {}
    explicit ConfigError(const std::string &message) : std::runtime_error(message) {}

    const std::string &key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace phonon
