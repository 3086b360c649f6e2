#include "lot/error.hpp"

namespace lot {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return "ShapeMismatch";
    case ErrorKind::DegenerateKernel: return "DegenerateKernel";
    case ErrorKind::Divergence: return "Divergence";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::RealityViolation: return "RealityViolation";
    case ErrorKind::StaleCache: return "StaleCache";
    case ErrorKind::CannotCertify: return "CannotCertify";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace lot
