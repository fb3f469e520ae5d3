#pragma once

#include <stdexcept>
#include <string>

namespace microloc {

enum class ErrorCode {
  OutOfDomain,
  DegenerateMetric,
  SolverDiverged,
  NotInNormalNeighbourhood,
  GridTooCoarse,
  WindowTooWide,
  LeftDomain,
  NonNullStart,
  KernelViolation,
  FactorizationFailed,
  NotRecognized,
  ConfigError,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace microloc
