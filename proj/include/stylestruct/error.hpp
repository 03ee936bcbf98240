#pragma once

#include <stdexcept>
#include <string>

namespace stylestruct {

/// Inconsistent shapes, bad hyperparameters, malformed architecture.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: out-of-range labels, malformed files, truncated checkpoints.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training halted by the divergence guard or a non-finite gradient.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training stopped on request (SIGINT) after writing a checkpoint.
class InterruptedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stylestruct
