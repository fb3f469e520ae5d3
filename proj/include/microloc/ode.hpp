#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace microloc {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 picks a step from the span
  long max_steps = 2'000'000;
};

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;
// Extra acceptance test for a trial step; returning false halves the step.
using StepGuard = std::function<bool(double t, const Eigen::VectorXd& y)>;

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
};

// Dormand-Prince 5(4). Integrates from times.front() and lands exactly on every
// entry of `times` (monotone, either direction). Returns the state at each.
// An OutOfDomain error thrown by the right-hand side shrinks the step; if the
// step collapses the error is rethrown as LeftDomain.
std::vector<Eigen::VectorXd> integrate_dopri5(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                                              const std::vector<double>& times,
                                              const OdeOptions& options = {},
                                              const StepGuard& guard = {}, OdeStats* stats = nullptr);

}  // namespace microloc
