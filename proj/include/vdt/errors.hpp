// Exception taxonomy shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace vdt {

// Bad static configuration (network shapes, run configs, unknown names).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad runtime input (dimension mismatch, non-finite cost entries, ...).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure during training; carries the iteration it happened at.
struct TrainingError : std::runtime_error {
    int iteration;
    explicit TrainingError(const std::string& msg, int iter = -1)
        : std::runtime_error(msg), iteration(iter) {}
};

// Numeric failure during generation; carries the step index.
struct GenerationError : std::runtime_error {
    int step;
    explicit GenerationError(const std::string& msg, int s = -1)
        : std::runtime_error(msg), step(s) {}
};

// File read/write problems.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vdt
