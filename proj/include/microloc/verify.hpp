#pragma once

#include <map>
#include <string>
#include <vector>

#include "microloc/geometry.hpp"

namespace microloc {

// Cross-module property checks run by `microloc verify`.
struct CheckResult {
  std::string check;
  std::string metric;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int samples = 0;
  std::string detail;
};

struct VerifyOptions {
  std::vector<std::string> checks;  // empty: all
  std::vector<MetricSpec> metrics{MetricSpec::minkowski(), MetricSpec::schwarzschild(1.0)};
  std::map<std::string, double> tolerances;  // per check name, before scaling
  double tolerance_scale = 1.0;
  unsigned seed = 20240611;
  int jobs = 1;
};

// anticommutator, nabla_gamma, rpt, null_drift, dencker_transport, lichnerowicz, kernel_form
const std::vector<std::string>& verify_check_names();
double default_tolerance(const std::string& check);

// One record per (check, metric), in check-major order.
std::vector<CheckResult> run_verify(const VerifyOptions& options);

}  // namespace microloc
