#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Shape or layout problems: mismatched tensor dims, bad patch grids, etc.
struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values or violated preconditions.
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A component cannot perform the requested operation (e.g. a black-box
// model asked for pixel gradients, or an unknown plugin id).
struct CapabilityError : std::runtime_error {
    explicit CapabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Text oracle failed to produce usable output after retries.
struct OracleError : std::runtime_error {
    explicit OracleError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf encountered during optimization; carries the step index.
struct NumericalError : std::runtime_error {
    NumericalError(const std::string& msg, int step)
        : std::runtime_error(msg + " (step " + std::to_string(step) + ")"), step_index(step) {}
    int step_index;
};

// A judge/oracle response could not be parsed into a verdict.
struct EvaluationError : std::runtime_error {
    explicit EvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace forge
