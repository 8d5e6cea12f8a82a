#include "handover/error.hpp"

namespace handover {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::Incompatible: return "incompatible";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Capability: return "capability";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Length: return "length";
    case ErrorKind::Bounds: return "bounds";
    case ErrorKind::MetricUndefined: return "metric-undefined";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Numeric: return "numeric";
    }
    return "unknown";
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Usage:
        return 2;
    case ErrorKind::Format:
    case ErrorKind::Io:
    case ErrorKind::Incompatible:
        return 3;
    case ErrorKind::Validation:
    case ErrorKind::Alignment:
    case ErrorKind::Capability:
    case ErrorKind::Parameter:
    case ErrorKind::Length:
    case ErrorKind::Bounds:
    case ErrorKind::MetricUndefined:
        return 4;
    case ErrorKind::Shape:
    case ErrorKind::Numeric:
        return 5;
    }
    return 1;
}

void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, std::string(to_string(kind)) + " error: " + message);
}

}  // namespace handover
