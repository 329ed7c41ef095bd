// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace gtpdm {

/// Base class for every error raised by the engine. `kind()` is a stable
/// machine-readable tag used by the CLI error record.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

class TapeError : public Error {
public:
    explicit TapeError(const std::string& m) : Error("tape", m) {}
};

class FeatureError : public Error {
public:
    explicit FeatureError(const std::string& m) : Error("feature", m) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& m) : Error("validation", m) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& m) : Error("io", m) {}
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& m) : Error("training", m) {}
};

} // namespace gtpdm
