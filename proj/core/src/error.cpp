#include "palcare/error.hpp"

namespace palcare {

std::string_view error_kind_token(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Config: return "config";
    case ErrorKind::StageOrder: return "stage_order";
    case ErrorKind::Mismatch: return "mismatch";
    case ErrorKind::UnknownPatient: return "unknown_patient";
    case ErrorKind::Numeric: return "numeric";
    }
    return "unknown";
}

}  // namespace palcare
