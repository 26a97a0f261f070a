#include "ergolab/error.hpp"

namespace ergolab {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::IncompatibleGrids: return "incompatible-grids";
        case ErrorKind::Configuration: return "configuration";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::SingularDerivative: return "singular-derivative";
        case ErrorKind::NumericalEscape: return "numerical-escape";
        case ErrorKind::DegenerateMeasure: return "degenerate-measure";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::Truncation: return "truncation";
        case ErrorKind::Fit: return "fit";
        case ErrorKind::Precondition: return "precondition";
        case ErrorKind::Parameter: return "parameter";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace ergolab
