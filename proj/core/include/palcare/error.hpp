#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace palcare {

/// Coarse failure classes. The CLI prints the token as a machine-parseable
/// error category.
enum class ErrorKind {
    Io,
    Parse,
    Validation,
    Config,
    StageOrder,
    Mismatch,
    UnknownPatient,
    Numeric,
};

std::string_view error_kind_token(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace palcare
