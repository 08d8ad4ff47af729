#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crcpanel {

enum class ErrorKind {
    Validation,
    Dimension,
    UnsupportedShape,
    InvalidPeriod,
    DegenerateSample,
    SingularDesign,
    TooFewSlowMovers,
    CollinearTimeShift,
    NoMovers,
    InsufficientMoverVariation,
    Propagation,
    UnbalancedPanel,
    Parse,
    Serialization,
    StudyFailed,
};

std::string_view to_string(ErrorKind kind);

// Numerical degeneracies (singular designs, empty local samples) as opposed
// to malformed input. The CLI maps the two families to different exit codes.
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

    // Same error with "<stage>: " prepended to the message.
    Error with_stage(std::string_view stage) const;

private:
    ErrorKind kind_;
};

}  // namespace crcpanel
