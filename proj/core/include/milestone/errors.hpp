#pragma once

#include <stdexcept>
#include <string>

namespace milestone {

// Bad flags, unreadable config files, unloadable merge tables. Exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed transcripts, ground truth, fixtures. Exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Completion backend failures that survive retry. Exit code 3.
class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& what, int status_code = 0, bool retryable = false)
        : std::runtime_error(what), status(status_code), retryable(retryable) {}

    int status;
    bool retryable;
};

}  // namespace milestone
