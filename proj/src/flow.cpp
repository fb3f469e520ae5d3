#include "microloc/flow.hpp"

#include <cmath>

#include "microloc/error.hpp"
#include "microloc/ode.hpp"

namespace microloc {

namespace {

const cplx I(0, 1);

Eigen::VectorXd pack(const PhasePoint& p) {
  Eigen::VectorXd y(8);
  y << p.x, p.xi;
  return y;
}

std::vector<double> uniform_times(double a, double b, int steps) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "a strip needs at least one step");
  std::vector<double> t(steps + 1);
  for (int i = 0; i <= steps; ++i) t[i] = a + (b - a) * i / steps;
  t.back() = b;
  return t;
}

double hamiltonian(const MetricSpec& spec, const Vec4& x, const Vec4& xi) {
  std::array<double, 4> xa{x[0], x[1], x[2], x[3]};
  double g[4][4];
  spec.lower(xa, g);
  Mat4 G;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) G(i, j) = g[i][j];
  Vec4 u = G.partialPivLu().solve(xi);
  return xi.dot(u);
}

OdeOptions ode_options(const FlowOptions& o) {
  OdeOptions opt;
  opt.rtol = o.rtol;
  opt.atol = o.atol;
  return opt;
}

// Phase-space part of the flow from a cache with at least Connection level.
void phase_rhs(const GeometryCache& c, const Vec4& xi, Vec4& xdot, Vec4& xidot) {
  Vec4 u = c.g_inv * xi;
  xdot = 2.0 * u;
  for (int l = 0; l < 4; ++l) xidot[l] = u.dot(c.dg[l] * u);
}

VecXc fibre_of(const Eigen::VectorXd& y, int n) {
  VecXc w(n);
  for (int i = 0; i < n; ++i) w[i] = cplx(y[8 + i], y[8 + n + i]);
  return w;
}

void store_fibre(const VecXc& w, Eigen::VectorXd& dy) {
  const auto n = w.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    dy[8 + i] = w[i].real();
    dy[8 + n + i] = w[i].imag();
  }
}

using FibreLaw = std::function<VecXc(const Vec4& x, const Vec4& xi, const VecXc& w, Vec4& xdot, Vec4& xidot)>;

PolarizedStrip run_augmented(const BicharStrip& strip, const VecXc& w0, FibreKind kind, const FibreLaw& law,
                             const FlowOptions& options) {
  if (strip.size() < 2) throw Error(ErrorCode::InvalidArgument, "strip has fewer than two samples");
  const int n = static_cast<int>(w0.size());
  Eigen::VectorXd y0(8 + 2 * n);
  y0.head<8>() = pack(strip.points.front());
  for (int i = 0; i < n; ++i) {
    y0[8 + i] = w0[i].real();
    y0[8 + n + i] = w0[i].imag();
  }
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    Vec4 x = y.head<4>(), xi = y.segment<4>(4), xdot, xidot;
    VecXc dw = law(x, xi, fibre_of(y, n), xdot, xidot);
    dy.head<4>() = xdot;
    dy.segment<4>(4) = xidot;
    store_fibre(dw, dy);
  };
  auto out = integrate_dopri5(rhs, y0, strip.tau, ode_options(options));
  PolarizedStrip ps;
  ps.kind = kind;
  ps.strip.metric = strip.metric;
  ps.strip.tau = strip.tau;
  ps.strip.hamiltonian = strip.hamiltonian;
  ps.strip.xi0_norm2 = strip.xi0_norm2;
  for (const auto& y : out) {
    PhasePoint p{y.head<4>(), y.segment<4>(4)};
    ps.strip.points.push_back(p);
    ps.strip.q.push_back(hamiltonian(strip.metric, p.x, p.xi));
    ps.fibre.push_back(fibre_of(y, n));
  }
  return ps;
}

MatXc spinor_law_matrix(const SpinConnection& s, const Vec4& xdot) { return MatXc(contract(s, xdot)); }

}  // namespace

double BicharStrip::max_drift() const {
  double m = 0.0;
  for (double v : q) m = std::max(m, std::abs(v));
  return xi0_norm2 > 0 ? m / xi0_norm2 : m;
}

BicharStrip integrate_bicharacteristic(const MetricSpec& spec, const PhasePoint& start, double tau0, double tau1,
                                       int steps, const FlowOptions& options) {
  spec.check_domain(start.x);
  BicharStrip s;
  s.metric = spec;
  s.xi0_norm2 = start.xi.squaredNorm();
  if (s.xi0_norm2 == 0.0) throw Error(ErrorCode::NonNullStart, "zero covector");
  double q0 = hamiltonian(spec, start.x, start.xi);
  if (std::abs(q0) > options.null_start_tolerance * s.xi0_norm2)
    throw Error(ErrorCode::NonNullStart, "start is not null: |q| / |xi|^2 = " + std::to_string(std::abs(q0) / s.xi0_norm2));

  s.tau = uniform_times(tau0, tau1, steps);
  const double bound = options.drift_tolerance * s.xi0_norm2;
  Eigen::VectorXd last = pack(start);
  auto guard = [&](double, const Eigen::VectorXd& y) {
    last = y;
    try {
      return std::abs(hamiltonian(spec, y.head<4>(), y.segment<4>(4))) <= bound;
    } catch (const Error&) {
      return false;
    }
  };
  auto rhs = [&spec](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { geodesic_rhs(spec, y.data(), dy.data()); };
  std::vector<Eigen::VectorXd> out;
  try {
    out = integrate_dopri5(rhs, pack(start), s.tau, ode_options(options), guard);
  } catch (const Error& e) {
    // blow-up of the coordinates or the covector means the curve runs off the chart
    bool escaping = !last.allFinite() || !spec.in_domain(last.head<4>()) ||
                    last.segment<4>(4).squaredNorm() > 1e6 * s.xi0_norm2 ||
                    last.head<4>().cwiseAbs().maxCoeff() > 1e6 * std::max(1.0, start.x.cwiseAbs().maxCoeff());
    if (e.code() == ErrorCode::SolverDiverged && escaping)
      throw Error(ErrorCode::LeftDomain, "trajectory left the chart domain");
    if (e.code() == ErrorCode::SolverDiverged)
      throw Error(ErrorCode::SolverDiverged, "null drift could not be kept below tolerance");
    throw;
  }
  for (const auto& y : out) {
    PhasePoint p{y.head<4>(), y.segment<4>(4)};
    s.points.push_back(p);
    s.q.push_back(hamiltonian(spec, p.x, p.xi));
  }
  return s;
}

Vec4 null_covector(const MetricSpec& spec, const Vec4& x, const Eigen::Vector3d& n) {
  if (n.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "direction must be nonzero");
  auto c = metric_at(spec, x, CacheLevel::Metric);
  Eigen::Vector3d d = n.normalized();
  Vec4 v = c.tetrad * Vec4(1.0, d[0], d[1], d[2]);
  return c.g * v;
}

Vec4 project_to_null(const MetricSpec& spec, const Vec4& x, const Vec4& xi) {
  auto c = metric_at(spec, x, CacheLevel::Metric);
  Vec4 k = c.tetrad.transpose() * xi;  // frame components xi_a = e^mu_a xi_mu
  double s = k.tail<3>().norm();
  if (s == 0.0 || k[0] == 0.0) throw Error(ErrorCode::InvalidArgument, "covector has no null projection");
  k.tail<3>() *= std::abs(k[0]) / s;
  return c.coframe.transpose() * k;
}

PhasePoint photon_sphere_start(double mass, double xi_t) {
  auto spec = MetricSpec::schwarzschild(mass);
  PhasePoint p;
  p.x = Vec4(0.0, 3.0 * mass, kPi / 2, 0.0);
  double base = std::sqrt(27.0) * mass * std::abs(xi_t);
  double state[8], d[8];
  double t = xi_t;
  for (int attempt = 0; attempt < 64; ++attempt) {
    double up = base, down = base;
    for (int k = 0; k < 4096; ++k) {
      for (double l : {up, down}) {
        double s[8] = {p.x[0], p.x[1], p.x[2], p.x[3], t, 0.0, 0.0, l};
        geodesic_rhs(spec, s, d);
        if (d[5] == 0.0 && d[6] == d[6]) {
          std::copy(s, s + 8, state);
          p.xi = Vec4(state[4], state[5], state[6], state[7]);
          return p;
        }
      }
      up = std::nextafter(up, INFINITY);
      down = std::nextafter(down, 0.0);
    }
    t = std::nextafter(t, INFINITY);
  }
  throw Error(ErrorCode::SolverDiverged, "no floating-point fixed point found on the photon sphere");
}

Mat4c PolarizedStrip::bispinor(size_t k) const { return unflatten(fibre.at(k)); }

VecXc flatten(const Mat4c& m) {
  VecXc v(16);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) v[j * 4 + i] = m(i, j);
  return v;
}

Mat4c unflatten(const VecXc& v) {
  if (v.size() != 16) throw Error(ErrorCode::InvalidArgument, "bispinor fibre must have 16 entries");
  Mat4c m;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) m(i, j) = v[j * 4 + i];
  return m;
}

PolarizedStrip transport_vector(const BicharStrip& strip, const VecXc& w0, const FlowOptions& options) {
  if (w0.size() != 4) throw Error(ErrorCode::InvalidArgument, "vector fibre must have 4 entries");
  const MetricSpec& spec = strip.metric;
  FibreLaw law = [&spec](const Vec4& x, const Vec4& xi, const VecXc& w, Vec4& xdot, Vec4& xidot) {
    auto c = metric_at(spec, x, CacheLevel::Connection);
    phase_rhs(c, xi, xdot, xidot);
    Mat4 G;
    for (int nu = 0; nu < 4; ++nu)
      for (int mu = 0; mu < 4; ++mu) {
        double s = 0.0;
        for (int r = 0; r < 4; ++r) s += c.christoffel[nu](r, mu) * xdot[r];
        G(nu, mu) = s;
      }
    return VecXc(-(G.cast<cplx>() * w));
  };
  return run_augmented(strip, w0, FibreKind::Vector, law, options);
}

PolarizedStrip transport_spinor(const BicharStrip& strip, const VecXc& w0, SpinorSide side,
                                const FlowOptions& options) {
  if (side == SpinorSide::BispinorBoth || side == SpinorSide::BispinorRightOnly) {
    return transport_spinor(strip, unflatten(w0), side, options);
  }
  if (w0.size() != 4) throw Error(ErrorCode::InvalidArgument, "spinor fibre must have 4 entries");
  const MetricSpec& spec = strip.metric;
  const bool co = side == SpinorSide::Cospinor;
  FibreLaw law = [&spec, co](const Vec4& x, const Vec4& xi, const VecXc& w, Vec4& xdot, Vec4& xidot) {
    auto c = metric_at(spec, x, CacheLevel::Connection);
    phase_rhs(c, xi, xdot, xidot);
    MatXc s = spinor_law_matrix(spin_connection(c), xdot);
    return co ? VecXc(s.transpose() * w) : VecXc(-(s * w));
  };
  return run_augmented(strip, w0, co ? FibreKind::Cospinor : FibreKind::Spinor, law, options);
}

PolarizedStrip transport_spinor(const BicharStrip& strip, const Mat4c& w0, SpinorSide side,
                                const FlowOptions& options) {
  if (side == SpinorSide::Spinor || side == SpinorSide::Cospinor)
    throw Error(ErrorCode::InvalidArgument, "matrix fibre needs a bispinor transport side");
  const MetricSpec& spec = strip.metric;
  const bool both = side == SpinorSide::BispinorBoth;
  FibreLaw law = [&spec, both](const Vec4& x, const Vec4& xi, const VecXc& w, Vec4& xdot, Vec4& xidot) {
    auto c = metric_at(spec, x, CacheLevel::Connection);
    phase_rhs(c, xi, xdot, xidot);
    Mat4c s = contract(spin_connection(c), xdot);
    Mat4c W = unflatten(w);
    Mat4c dW = W * s;
    if (both) dW -= s * W;
    return flatten(dW);
  };
  return run_augmented(strip, flatten(w0), FibreKind::Bispinor, law, options);
}

double kernel_residual(const OperatorSpec& op, const Vec4& x, const Vec4& xi, const VecXc& w) {
  MatXc p = principal_symbol(op, x, xi);
  // coefficient scale, not |p|, which itself vanishes on the characteristic set of scalar-type symbols
  double cs = 0.0;
  for (const auto& t : principal_part(op).terms(x)) {
    double mono = 1.0;
    for (int mu = 0; mu < 4; ++mu) mono *= std::pow(std::abs(xi[mu]), t.alpha[mu]);
    cs += t.coeff.norm() * mono;
  }
  double scale = cs * w.norm();
  if (scale == 0.0) return 0.0;
  return (p * w).norm() / scale;
}

double projective_distance(const VecXc& a, const VecXc& b) {
  double na = a.squaredNorm(), nb = b.squaredNorm();
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::InvalidArgument, "projective comparison of a zero vector");
  MatXc d = a * a.adjoint() / na - b * b.adjoint() / nb;
  return d.cwiseAbs().maxCoeff();
}

double ray_angle(const VecXc& a, const VecXc& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::InvalidArgument, "projective comparison of a zero vector");
  VecXc ah = a / na, bh = b / nb;
  cplx ip = bh.dot(ah);
  cplx phase = std::abs(ip) > 0 ? ip / std::abs(ip) : cplx(1.0);
  return (ah - phase * bh).norm();
}

}  // namespace microloc
