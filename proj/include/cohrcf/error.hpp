#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cohrcf {

enum class ErrorCode {
    MissingFile,
    MalformedLine,
    OutOfRangeRating,
    EmptyMatrix,
    IoFailure,
    InvalidArgument,
    InvalidFoldCount,
    InvalidK,
    UnknownMeasure,
    DimensionMismatch,
    LengthMismatch,
    EmptyInput,
    DegenerateEstimate,
    TooFewClusters,
    EmptyCluster,
    ItemNotIndexed,
    NoHiddenRatings,
    InvariantViolation,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::OutOfRangeRating: return "OutOfRangeRating";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidFoldCount: return "InvalidFoldCount";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::UnknownMeasure: return "UnknownMeasure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateEstimate: return "DegenerateEstimate";
    case ErrorCode::TooFewClusters: return "TooFewClusters";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::ItemNotIndexed: return "ItemNotIndexed";
    case ErrorCode::NoHiddenRatings: return "NoHiddenRatings";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    }
    return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` tells
/// callers (and the CLI exit-code mapping) what went wrong.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace detail

}  // namespace cohrcf
