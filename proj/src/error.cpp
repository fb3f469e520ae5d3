#include "microloc/error.hpp"

namespace microloc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::DegenerateMetric: return "DegenerateMetric";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::NotInNormalNeighbourhood: return "NotInNormalNeighbourhood";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::WindowTooWide: return "WindowTooWide";
    case ErrorCode::LeftDomain: return "LeftDomain";
    case ErrorCode::NonNullStart: return "NonNullStart";
    case ErrorCode::KernelViolation: return "KernelViolation";
    case ErrorCode::FactorizationFailed: return "FactorizationFailed";
    case ErrorCode::NotRecognized: return "NotRecognized";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace microloc
