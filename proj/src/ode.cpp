#include "microloc/ode.hpp"

#include <algorithm>
#include <cmath>

#include "microloc/error.hpp"

namespace microloc {

namespace {

// Dormand-Prince tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

std::vector<Eigen::VectorXd> integrate_dopri5(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                                              const std::vector<double>& times, const OdeOptions& opt,
                                              const StepGuard& guard, OdeStats* stats) {
  std::vector<Eigen::VectorXd> out;
  if (times.empty()) return out;
  out.reserve(times.size());
  out.push_back(y0);
  if (times.size() == 1) return out;

  const double t_begin = times.front();
  const double t_end = times.back();
  const double dir = t_end >= t_begin ? 1.0 : -1.0;
  const double span = std::abs(t_end - t_begin);
  const Eigen::Index n = y0.size();

  Eigen::VectorXd y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  double t = t_begin;
  rhs(t, y, k1);

  double h = opt.initial_step > 0 ? opt.initial_step : std::max(span * 1e-3, 1e-12);
  const double h_min = std::max(span, 1.0) * 1e-14;
  long steps = 0;
  size_t next = 1;

  while (next < times.size()) {
    if (++steps > opt.max_steps) throw Error(ErrorCode::SolverDiverged, "integrator step budget exhausted");
    double target = times[next];
    double remaining = std::abs(target - t);
    bool hits_target = false;
    double step = h;
    if (step >= remaining) {
      step = remaining;
      hits_target = true;
    }
    double hs = dir * step;

    bool domain_failure = false;
    try {
      ytmp = y + hs * a21 * k1;
      rhs(t + c2 * hs, ytmp, k2);
      ytmp = y + hs * (a31 * k1 + a32 * k2);
      rhs(t + c3 * hs, ytmp, k3);
      ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * hs, ytmp, k4);
      ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * hs, ytmp, k5);
      ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + hs, ytmp, k6);
      ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      rhs(t + hs, ynew, k7);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfDomain && e.code() != ErrorCode::DegenerateMetric) throw;
      domain_failure = true;
    }
    if (domain_failure) {
      h = step * 0.25;
      if (stats) ++stats->rejected;
      if (h < h_min) throw Error(ErrorCode::LeftDomain, "trajectory left the chart domain");
      continue;
    }

    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      double r = err[i] / sc;
      norm += r * r;
    }
    norm = std::sqrt(norm / static_cast<double>(n));
    if (!std::isfinite(norm)) norm = 1e10;

    bool accept = norm <= 1.0;
    if (accept && guard && !guard(t + hs, ynew)) {
      accept = false;
      norm = std::max(norm, 32.0);  // forces a halving below
    }
    double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    if (accept) {
      if (stats) ++stats->accepted;
      t = hits_target ? target : t + hs;
      y = ynew;
      k1 = k7;
      if (hits_target) {
        out.push_back(y);
        ++next;
        // keep the previous step size, the truncation was artificial
        h = std::max(h, step * factor);
      } else {
        h = step * factor;
      }
    } else {
      if (stats) ++stats->rejected;
      h = step * std::min(factor, 0.5);
      if (h < h_min) throw Error(ErrorCode::SolverDiverged, "step size underflow");
    }
  }
  return out;
}

}  // namespace microloc
