#include "crcpanel/error.hpp"

namespace crcpanel {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::UnsupportedShape: return "unsupported-shape";
    case ErrorKind::InvalidPeriod: return "invalid-period";
    case ErrorKind::DegenerateSample: return "degenerate-sample";
    case ErrorKind::SingularDesign: return "singular-design";
    case ErrorKind::TooFewSlowMovers: return "too-few-slow-movers";
    case ErrorKind::CollinearTimeShift: return "collinear-time-shift";
    case ErrorKind::NoMovers: return "no-movers";
    case ErrorKind::InsufficientMoverVariation: return "insufficient-mover-variation";
    case ErrorKind::Propagation: return "propagation";
    case ErrorKind::UnbalancedPanel: return "unbalanced-panel";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Serialization: return "serialization";
    case ErrorKind::StudyFailed: return "study-failed";
    }
    return "unknown";
}

bool is_numerical(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DegenerateSample:
    case ErrorKind::SingularDesign:
    case ErrorKind::TooFewSlowMovers:
    case ErrorKind::CollinearTimeShift:
    case ErrorKind::NoMovers:
    case ErrorKind::InsufficientMoverVariation:
    case ErrorKind::Propagation:
    case ErrorKind::StudyFailed:
        return true;
    default:
        return false;
    }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

Error Error::with_stage(std::string_view stage) const {
    return Error(kind_, std::string(stage) + ": " + what());
}

}  // namespace crcpanel
