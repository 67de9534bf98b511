#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sticky {

enum class ErrorCode {
    InvalidModel,
    InvalidArgument,
    NonIntegrable,
    CollarTooDeep,
    GridTooCoarse,
    NegativeRate,
    NormalDerivativeMismatch,
    NonFinite,
    MissingConstants,
    PhiNotDecaying,
    XiNotDecaying,
    NotUltra,
    Unclassified,
    Disconnected,
    NonConvergent,
    InsufficientSpan,
    AbsorbingState,
    ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonIntegrable: return "NonIntegrable";
    case ErrorCode::CollarTooDeep: return "CollarTooDeep";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::NormalDerivativeMismatch: return "NormalDerivativeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::MissingConstants: return "MissingConstants";
    case ErrorCode::PhiNotDecaying: return "PhiNotDecaying";
    case ErrorCode::XiNotDecaying: return "XiNotDecaying";
    case ErrorCode::NotUltra: return "NotUltra";
    case ErrorCode::Unclassified: return "Unclassified";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::InsufficientSpan: return "InsufficientSpan";
    case ErrorCode::AbsorbingState: return "AbsorbingState";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code, so
/// callers (and the CLI exit-code mapping) can branch on the kind of failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) throw Error(code, what);
}

} // namespace sticky
