#pragma once

#include <stdexcept>
#include <string>

namespace dgrpo {

// Invalid configuration values or files (exit code 1 at the CLI).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside an operation's domain (out-of-range accuracy, shape mismatch, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Unreadable or unwritable files (exit code 2).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite ratios, log-probabilities or KL terms (exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dgrpo
