#pragma once

#include <stdexcept>
#include <string>

namespace adex {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct RangeError : std::runtime_error {
    explicit RangeError(const std::string& msg) : std::runtime_error("range error: " + msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

// Non-finite state during forward integration; carries the offending step.
struct IntegrationError : std::runtime_error {
    long step;
    IntegrationError(const std::string& msg, long step_index)
        : std::runtime_error("integration error at step " + std::to_string(step_index) + ": " + msg),
          step(step_index) {}
};

// Non-finite intermediate in a network/flow computation.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

struct BadMagicError : IoError {
    explicit BadMagicError(const std::string& path) : IoError("bad magic in " + path) {}
};

struct TruncatedFileError : IoError {
    explicit TruncatedFileError(const std::string& path) : IoError("truncated payload in " + path) {}
};

struct ChecksumError : IoError {
    explicit ChecksumError(const std::string& path) : IoError("checksum mismatch in " + path) {}
};

// Posterior mass escaped the prior box: rejection acceptance rate collapsed.
struct LeakageError : std::runtime_error {
    explicit LeakageError(const std::string& msg) : std::runtime_error("leakage error: " + msg) {}
};

struct StageError : std::runtime_error {
    std::string stage;
    StageError(const std::string& stage_name, const std::string& msg)
        : std::runtime_error("stage '" + stage_name + "' failed: " + msg), stage(stage_name) {}
};

}  // namespace adex
