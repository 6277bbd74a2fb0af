#pragma once

#include <stdexcept>
#include <string>

namespace projlab {

/// Precondition failures map to CLI exit code 2, numerical failures to 3.
enum class ErrorKind { Precondition, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Short machine-readable tag such as "cocycle overflow" or "boundary hit".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

inline Error precondition_error(std::string code, const std::string& what) {
    return Error(ErrorKind::Precondition, std::move(code), what);
}

inline Error numerical_error(std::string code, const std::string& what) {
    return Error(ErrorKind::Numerical, std::move(code), what);
}

/// Process exit status for an error: 2 for preconditions, 3 for numerical failures.
inline int exit_code(ErrorKind kind) { return kind == ErrorKind::Precondition ? 2 : 3; }

} // namespace projlab
