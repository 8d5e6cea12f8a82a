#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace handover {

enum class ErrorKind {
    Usage,
    Format,
    Io,
    Incompatible,
    Validation,
    Alignment,
    Capability,
    Parameter,
    Length,
    Bounds,
    MetricUndefined,
    Shape,
    Numeric,
};

std::string_view to_string(ErrorKind kind);

// Process exit code for an error class: 2 usage, 3 data/format, 4 validation,
// 5 numeric failure.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace handover
