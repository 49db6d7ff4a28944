#pragma once

#include <stdexcept>
#include <string>

namespace fsdepth {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or size mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input value outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Non-finite value produced or consumed where finiteness is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// File I/O failure with a machine-checkable kind.
class IoError : public Error {
public:
    enum class Kind {
        missing_file,
        malformed,
        unsupported,
        write_failed,
    };

    IoError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Configuration parse or validation failure, naming the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string key, int line, const std::string& message)
        : Error(message), key_(std::move(key)), line_(line) {}

    const std::string& key() const { return key_; }
    int line() const { return line_; }  // 0 when not tied to a file line

private:
    std::string key_;
    int line_;
};

}  // namespace fsdepth
