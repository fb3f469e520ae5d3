#include <cmath>

#include "microloc/geometry.hpp"
#include "microloc/ode.hpp"

namespace microloc {

namespace {

Eigen::VectorXd pack(const Vec4& x, const Vec4& xi) {
  Eigen::VectorXd s(8);
  s << x, xi;
  return s;
}

OdeRhs hamilton_rhs(const MetricSpec& spec) {
  return [&spec](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { geodesic_rhs(spec, y.data(), dy.data()); };
}

std::vector<double> uniform(double a, double b, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = a + (b - a) * i / (n - 1);
  t.back() = b;
  return t;
}

// Endpoint of the geodesic with initial tangent v after unit affine parameter.
Vec4 shoot(const MetricSpec& spec, const Vec4& x, const Vec4& v, const OdeOptions& opt) {
  Mat4 g = metric_at(spec, x, CacheLevel::Metric).g;
  auto out = integrate_dopri5(hamilton_rhs(spec), pack(x, 0.5 * g * v), {0.0, 1.0}, opt);
  return out.back().head<4>();
}

}  // namespace

GeodesicSolution solve_geodesic_bvp(const MetricSpec& spec, const Vec4& x, const Vec4& y, const BvpOptions& o) {
  spec.check_domain(x);
  spec.check_domain(y);
  if ((x - y).norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "geodesic endpoints coincide");
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-14;

  Vec4 v = y - x;
  auto residual_of = [&](const Vec4& vv, Vec4& r) -> bool {
    try {
      r = shoot(spec, x, vv, opt) - y;
      return r.allFinite();
    } catch (const Error&) {
      return false;
    }
  };

  Vec4 r;
  if (!residual_of(v, r)) throw Error(ErrorCode::SolverDiverged, "initial shot left the domain");
  double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  int it = 0;
  double best = r.cwiseAbs().maxCoeff();
  // iterate past the tolerance while Newton still improves; this is cheap and
  // makes null/timelike decisions downstream sharper
  int extra = 0;
  while (it < o.max_iterations) {
    if (best < o.tolerance * scale) {
      if (extra++ >= 1 || best < 1e-13 * scale) break;
    }
    ++it;
    Mat4 J;
    for (int k = 0; k < 4; ++k) {
      double h = 1e-7 * std::max(1.0, std::abs(v[k]));
      Vec4 vp = v, vm = v, rp, rm;
      vp[k] += h;
      vm[k] -= h;
      if (!residual_of(vp, rp) || !residual_of(vm, rm))
        throw Error(ErrorCode::SolverDiverged, "Jacobian probe left the domain");
      J.col(k) = (rp - rm) / (2 * h);
    }
    Vec4 step = J.fullPivLu().solve(-r);
    if (!step.allFinite()) throw Error(ErrorCode::SolverDiverged, "singular shooting Jacobian");
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 20; ++ls, lambda *= 0.5) {
      Vec4 trial = v + lambda * step, rt;
      if (residual_of(trial, rt) && rt.cwiseAbs().maxCoeff() < best) {
        v = trial;
        r = rt;
        best = rt.cwiseAbs().maxCoeff();
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!(best < o.tolerance * scale))
    throw Error(ErrorCode::SolverDiverged, "shooting did not converge (residual " + std::to_string(best) + ")");

  GeodesicSolution sol;
  Mat4 g = metric_at(spec, x, CacheLevel::Metric).g;
  sol.launch_vector = v;
  sol.launch_covector = g * v;
  sol.sigma = v.dot(g * v);
  sol.iterations = it;
  sol.residual = best;
  sol.tau = uniform(0.0, 1.0, std::max(2, o.curve_samples));
  auto states = integrate_dopri5(hamilton_rhs(spec), pack(x, 0.5 * g * v), sol.tau, opt);
  for (const auto& s : states) sol.curve.push_back({s.head<4>(), 2.0 * s.tail<4>()});
  return sol;
}

std::optional<NullConnection> geodesic_connect(const MetricSpec& spec, const Vec4& x, const Vec4& y,
                                               const BvpOptions& o) {
  spec.check_domain(x);
  spec.check_domain(y);
  if ((x - y).norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "x and y coincide");

  NullConnection nc;
  if (spec.is_minkowski()) {
    Vec4 d = y - x;
    double s = d.dot(eta() * d);
    if (std::abs(s) > o.null_tolerance * d.squaredNorm()) return std::nullopt;
    nc.y_in_future = d[0] > 0;
    nc.xi = eta() * d / d[0];
    nc.eta = nc.xi;
    nc.affine_length = std::abs(d[0]) / 2.0;
    nc.tau = uniform(0.0, nc.affine_length, std::max(2, o.curve_samples));
    // the curve carries the flow covector pointing from x towards y
    Vec4 flow_xi = eta() * d / std::abs(d[0]);
    for (double t : nc.tau) nc.curve.push_back({x + (t / nc.affine_length) * d, flow_xi});
    return nc;
  }

  GeodesicSolution sol = solve_geodesic_bvp(spec, x, y, o);
  const Vec4& v = sol.launch_vector;
  if (std::abs(sol.sigma) > o.null_tolerance * v.squaredNorm()) return std::nullopt;
  double v0 = v[0];
  if (v0 == 0.0) return std::nullopt;
  // with covector g v / |v0| the factor-2 flow reaches y after tau = |v0| / 2
  double scale = 1.0 / std::abs(v0);
  nc.y_in_future = v0 > 0;
  nc.affine_length = std::abs(v0) / 2.0;
  double sgn = nc.y_in_future ? 1.0 : -1.0;
  nc.xi = sgn * sol.launch_covector * scale;
  nc.eta = sgn * sol.curve.back().xi * scale;
  for (size_t k = 0; k < sol.tau.size(); ++k) {
    nc.tau.push_back(sol.tau[k] * nc.affine_length);
    nc.curve.push_back({sol.curve[k].x, sol.curve[k].xi * scale});
  }
  return nc;
}

double sigma_quadratic_distance(const MetricSpec& spec, const Vec4& x, const Vec4& y, const BvpOptions& o) {
  if (spec.is_minkowski()) {
    Vec4 d = x - y;
    return d.dot(eta() * d);
  }
  if ((x - y).norm() == 0.0) return 0.0;
  try {
    return solve_geodesic_bvp(spec, x, y, o).sigma;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SolverDiverged)
      throw Error(ErrorCode::NotInNormalNeighbourhood, std::string("no unique geodesic: ") + e.what());
    throw;
  }
}

}  // namespace microloc
