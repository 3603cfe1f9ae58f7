#pragma once

#include <stdexcept>
#include <string>

namespace coinfer {

enum class ErrorKind {
    InvalidParameter,
    InfeasibleConfiguration,
    InfeasibleGroup,
    InfeasibleUser,
    Parse,
    Schema,
    Invariant,
    CapExceeded,
    Validation,
    Precondition,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exception type thrown by every module of the library.
///
/// `kind()` lets callers (the CLI in particular) map failures to exit codes
/// without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace coinfer
