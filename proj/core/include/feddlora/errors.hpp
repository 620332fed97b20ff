#pragma once

#include <stdexcept>
#include <string>

namespace feddlora {

// Rank outside [1, min(h,w)] for some layer; message names the layer.
struct InvalidRankError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dimension mismatch between an operand and the layer/model it is applied to.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Model spec admits no rank >= 1.
struct DegenerateSpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dataset too small for the requested partitioning.
struct PartitionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf appeared in a training loss; message carries epoch/batch.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AggregationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EvaluationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Exponential-size input rejected by a brute-force oracle.
struct GuardError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace feddlora
