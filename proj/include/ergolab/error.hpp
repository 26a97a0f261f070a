#pragma once

#include <stdexcept>
#include <string>

namespace ergolab {

enum class ErrorKind {
    InvalidInput,
    IncompatibleGrids,
    Configuration,
    Domain,
    SingularDerivative,
    NumericalEscape,
    DegenerateMeasure,
    Convergence,
    Truncation,
    Fit,
    Precondition,
    Parameter,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace ergolab
