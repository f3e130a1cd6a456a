#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skboot {

enum class ErrorCode {
    InvalidArgument,
    InvalidMoment,
    LayoutMismatch,
    DegenerateSample,
    SingularCovariance,
    NoConvergence,
    ValidityStarvation,
    NumericalFailure,
    FitFailure,
    SingularTraffic,
    UndefinedStarvation,
    InsufficientB,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure the library surfaces carries a code so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

#define SKBOOT_REQUIRE(cond, code, msg)                 \
    do {                                                \
        if (!(cond)) throw ::skboot::Error((code), (msg)); \
    } while (0)

}  // namespace skboot
