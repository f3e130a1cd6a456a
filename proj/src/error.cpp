#include "skboot/error.hpp"

namespace skboot {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidMoment: return "InvalidMoment";
        case ErrorCode::LayoutMismatch: return "LayoutMismatch";
        case ErrorCode::DegenerateSample: return "DegenerateSample";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::ValidityStarvation: return "ValidityStarvation";
        case ErrorCode::NumericalFailure: return "NumericalFailure";
        case ErrorCode::FitFailure: return "FitFailure";
        case ErrorCode::SingularTraffic: return "SingularTraffic";
        case ErrorCode::UndefinedStarvation: return "UndefinedStarvation";
        case ErrorCode::InsufficientB: return "InsufficientB";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace skboot
