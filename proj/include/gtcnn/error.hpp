#pragma once

#include <stdexcept>
#include <string>

namespace gtcnn {

// Error categories map onto CLI exit codes: config -> 2, io/format -> 3,
// numeric -> 4. Everything else is a plain std::exception (bug).

/// Invalid configuration or arguments supplied by the caller.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem trouble: missing files, unwritable directories, short reads.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally invalid file content.
class FormatError : public std::runtime_error {
public:
    enum class Kind {
        MalformedHeader,
        UnsupportedCodec,
        EmptyPayload,
        BadMagic,
        Truncated,
        BadSidecar,
    };

    FormatError(Kind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Numerical failure at runtime (divergence, invariant violation).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

} // namespace gtcnn
