#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ivsir {

// Error families map onto the CLI exit codes: config -> 2, data -> 3,
// numeric -> 4.
enum class ErrorKind { config, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& code() const { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

struct ConfigError : Error {
    ConfigError(std::string code, const std::string& message)
        : Error(ErrorKind::config, std::move(code), message) {}
};

struct DataError : Error {
    DataError(std::string code, const std::string& message)
        : Error(ErrorKind::data, std::move(code), message) {}
};

struct NumericError : Error {
    NumericError(std::string code, const std::string& message)
        : Error(ErrorKind::numeric, std::move(code), message) {}
};

// --- numeric -------------------------------------------------------------

struct NonFiniteError : NumericError {
    explicit NonFiniteError(const std::string& where)
        : NumericError("NonFinite", "non-finite value encountered in " + where) {}
};

struct NonSymmetricError : NumericError {
    explicit NonSymmetricError(const std::string& detail)
        : NumericError("NonSymmetric", "matrix is not symmetric: " + detail) {}
};

struct NotPositiveDefiniteError : NumericError {
    explicit NotPositiveDefiniteError(int pivot_index)
        : NumericError("NotPositiveDefinite",
                       "matrix is not positive definite (pivot " +
                           std::to_string(pivot_index) + " <= 0)"),
          pivot(pivot_index) {}
    int pivot;
};

struct RankDeficientError : NumericError {
    explicit RankDeficientError(int column_index)
        : NumericError("RankDeficient",
                       "columns are numerically dependent (column " +
                           std::to_string(column_index) + ")"),
          column(column_index) {}
    int column;
};

struct DegenerateLabelsError : NumericError {
    DegenerateLabelsError()
        : NumericError("DegenerateLabels",
                       "labels must contain at least one 0 and one 1") {}
};

struct MaxIterationsError : NumericError {
    MaxIterationsError(int sweeps, std::vector<double> best_iterate,
                       double kkt_residual_value)
        : NumericError("MaxIterations",
                       "coordinate descent hit the sweep limit (" +
                           std::to_string(sweeps) + ")"),
          best(std::move(best_iterate)), kkt_residual(kkt_residual_value) {}
    std::vector<double> best;
    double kkt_residual;
};

struct DegenerateFoldsError : NumericError {
    explicit DegenerateFoldsError(const std::string& detail)
        : NumericError("DegenerateFolds", detail) {}
};

struct EigenvalueTooSmallError : NumericError {
    EigenvalueTooSmallError(int k, double value)
        : NumericError("EigenvalueTooSmall",
                       "kernel eigenvalue " + std::to_string(k + 1) +
                           " is below the 1e-10 guard (" + std::to_string(value) +
                           ")"),
          k(k), value(value) {}
    int k;
    double value;
};

struct CannotAchievePDError : NumericError {
    explicit CannotAchievePDError(int attempts)
        : NumericError("CannotAchievePD",
                       "noise covariance failed the Cholesky check after " +
                           std::to_string(attempts) + " redraws") {}
};

// --- data ----------------------------------------------------------------

struct TooFewObservationsError : DataError {
    TooFewObservationsError(int n, int needed)
        : DataError("TooFewObservations",
                    "need at least " + std::to_string(needed) +
                        " observations, got " + std::to_string(n)) {}
};

struct SliceTooSmallError : DataError {
    SliceTooSmallError(int slice, int size)
        : DataError("SliceTooSmall", "slice " + std::to_string(slice + 1) +
                                         " has " + std::to_string(size) +
                                         " observations (< 2)"),
          slice(slice), size(size) {}
    int slice;
    int size;
};

struct DimensionMismatchError : DataError {
    explicit DimensionMismatchError(const std::string& detail)
        : DataError("DimensionMismatch", detail) {}
};

// --- config --------------------------------------------------------------

struct InvalidArgumentError : ConfigError {
    explicit InvalidArgumentError(const std::string& detail)
        : ConfigError("InvalidArgument", detail) {}
};

}  // namespace ivsir
