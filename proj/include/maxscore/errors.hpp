#pragma once

#include <stdexcept>
#include <string>

namespace maxscore {

/// Input data is structurally unusable (wrong shape, empty where content is required).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : DataError {
    explicit DimensionMismatch(const std::string& what) : DataError(what) {}
};

struct EmptyDataset : DataError {
    explicit EmptyDataset(const std::string& what) : DataError(what) {}
};

struct EmptySample : DataError {
    explicit EmptySample(const std::string& what) : DataError(what) {}
};

struct InsufficientDraws : DataError {
    explicit InsufficientDraws(const std::string& what) : DataError(what) {}
};

/// Experiment configuration violates an invariant (caught before any work starts).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure cannot produce a trustworthy result.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateColumn : NumericalError {
    explicit DegenerateColumn(const std::string& what) : NumericalError(what) {}
};

struct SignConditionViolated : NumericalError {
    explicit SignConditionViolated(const std::string& what) : NumericalError(what) {}
};

struct QuadratureFailure : NumericalError {
    explicit QuadratureFailure(const std::string& what) : NumericalError(what) {}
};

struct GridTooCoarse : NumericalError {
    explicit GridTooCoarse(const std::string& what) : NumericalError(what) {}
};

struct BoundarySaturation : NumericalError {
    explicit BoundarySaturation(const std::string& what) : NumericalError(what) {}
};

}  // namespace maxscore
