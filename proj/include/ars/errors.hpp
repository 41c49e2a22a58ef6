#pragma once
#include <stdexcept>
#include <string>

namespace ars {

// Bad user-supplied data: files, coordinates, malformed input.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or degenerate configuration; carries the offending key.
struct ConfigError : std::runtime_error {
    std::string key;
    ConfigError(std::string k, const std::string& what)
        : std::runtime_error(what), key(std::move(k)) {}
};

// A caller broke an API contract; signals a bug, not bad data.
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Non-finite values or other numeric breakdown.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Operation invoked on an object in the wrong state (e.g. undersized buffer).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// Instance exceeds a guarded size limit (brute-force oracle).
struct SizeError : std::runtime_error {
    explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

// Internal bookkeeping went inconsistent.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

} // namespace ars
