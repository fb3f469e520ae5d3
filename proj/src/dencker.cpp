#include <cmath>

#include "microloc/error.hpp"
#include "microloc/flow.hpp"
#include "microloc/ode.hpp"

namespace microloc {

namespace {

const cplx I(0, 1);

void check_family(const DenckerSpec& d) {
  if (!d.op.metric && d.mode != TransportMode::Generic)
    throw Error(ErrorCode::InvalidArgument, "geometric transport modes need an operator with a metric");
}

// five-point first derivative on uniform samples, one-sided at the ends
VecXc stencil(const std::vector<VecXc>& w, size_t k, double h) {
  const size_t n = w.size();
  if (k >= 2 && k + 2 < n) return (-w[k + 2] + 8.0 * w[k + 1] - 8.0 * w[k - 1] + w[k - 2]) / (12.0 * h);
  if (k == 0) return (-25.0 * w[0] + 48.0 * w[1] - 36.0 * w[2] + 16.0 * w[3] - 3.0 * w[4]) / (12.0 * h);
  if (k == 1) return (-3.0 * w[0] - 10.0 * w[1] + 18.0 * w[2] - 6.0 * w[3] + w[4]) / (12.0 * h);
  if (k == n - 1)
    return (25.0 * w[n - 1] - 48.0 * w[n - 2] + 36.0 * w[n - 3] - 16.0 * w[n - 4] + 3.0 * w[n - 5]) / (12.0 * h);
  return (3.0 * w[n - 1] + 10.0 * w[n - 2] - 18.0 * w[n - 3] + 6.0 * w[n - 4] - w[n - 5]) / (12.0 * h);
}

}  // namespace

DenckerSpec make_dencker(const OperatorSpec& op, TransportMode mode) {
  DenckerSpec d;
  d.op = op;
  d.factorization = rpt_factorize(op);
  d.mode = mode;
  check_family(d);
  return d;
}

DenckerCoefficients dencker_coefficients(const DenckerSpec& d, const Vec4& x, const Vec4& xi) {
  const auto& f = d.factorization;
  PolynomialSymbol p = principal_part(d.op);
  SymbolValue sv = symbol_value(d.op, x, xi);
  MatXc pt = f.ptilde.value(x, xi);

  MatXc bracket = MatXc::Zero(pt.rows(), sv.principal.cols());
  Vec4 dq;
  for (int mu = 0; mu < 4; ++mu) {
    bracket += f.ptilde.d_xi(x, xi, mu) * p.d_x(x, xi, mu) - f.ptilde.d_x(x, xi, mu) * p.d_xi(x, xi, mu);
    dq[mu] = f.q.d_xi(x, xi, mu)(0, 0).real();
  }

  // d_xi h = dx/dtau of the strip
  Vec4 dh;
  if (d.op.metric) {
    auto c = metric_at(*d.op.metric, x, CacheLevel::Metric);
    dh = 2.0 * c.g_inv * xi;
  } else {
    dh = dq;
  }
  double n2 = dh.squaredNorm();
  if (n2 == 0.0) throw Error(ErrorCode::InvalidArgument, "flow is stationary at this point");

  DenckerCoefficients out;
  out.c = dq.dot(dh) / n2;
  out.B = 0.5 * bracket + I * pt * sv.subprincipal;
  return out;
}

std::vector<VecXc> dencker_derivative(const DenckerSpec& d, const BicharStrip& strip, const std::vector<VecXc>& w,
                                      double kernel_tolerance) {
  const size_t n = strip.size();
  if (w.size() != n) throw Error(ErrorCode::InvalidArgument, "fibre samples do not match the strip");
  if (n < 5) throw Error(ErrorCode::GridTooCoarse, "the derivative stencil needs at least five samples");
  double h = (strip.tau.back() - strip.tau.front()) / static_cast<double>(n - 1);
  for (size_t k = 1; k < n; ++k)
    if (std::abs(strip.tau[k] - strip.tau[k - 1] - h) > 1e-9 * std::abs(h))
      throw Error(ErrorCode::InvalidArgument, "strip samples must be uniform in tau");

  std::vector<VecXc> out(n);
  for (size_t k = 0; k < n; ++k) {
    const auto& p = strip.points[k];
    double kr = kernel_residual(d.op, p.x, p.xi, w[k]);
    if (kr > kernel_tolerance)
      throw Error(ErrorCode::KernelViolation,
                  "fibre sample " + std::to_string(k) + " is not in ker p (residual " + std::to_string(kr) + ")");
    auto dc = dencker_coefficients(d, p.x, p.xi);
    out[k] = dc.c * stencil(w, k, h) + dc.B * w[k];
  }
  return out;
}

PolarizedStrip hamilton_orbit(const DenckerSpec& d, const BicharStrip& strip, const VecXc& w0,
                              const FlowOptions& options) {
  check_family(d);
  if (strip.size() < 2) throw Error(ErrorCode::InvalidArgument, "strip has fewer than two samples");
  const auto& p0 = strip.points.front();
  double kr = kernel_residual(d.op, p0.x, p0.xi, w0);
  if (kr > 1e-6) throw Error(ErrorCode::KernelViolation, "initial fibre is not in ker p");

  if (d.mode == TransportMode::Spin) {
    if (d.op.family == "dirac") return transport_spinor(strip, w0, SpinorSide::Spinor, options);
    if (d.op.family == "dirac-adjoint") return transport_spinor(strip, w0, SpinorSide::Cospinor, options);
    throw Error(ErrorCode::InvalidArgument, "spin transport needs a Dirac family operator");
  }
  if (d.mode == TransportMode::LeviCivita) {
    if (d.op.size != 4 || d.op.family != "maxwell-lorentz")
      throw Error(ErrorCode::InvalidArgument, "Levi-Civita transport needs the vector family");
    return transport_vector(strip, w0, options);
  }

  const int n = static_cast<int>(w0.size());
  Eigen::VectorXd y0(8 + 2 * n);
  y0.head<4>() = p0.x;
  y0.segment<4>(4) = p0.xi;
  for (int i = 0; i < n; ++i) {
    y0[8 + i] = w0[i].real();
    y0[8 + n + i] = w0[i].imag();
  }
  const MetricSpec& spec = strip.metric;
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    geodesic_rhs(spec, y.data(), dy.data());
    VecXc w(n);
    for (int i = 0; i < n; ++i) w[i] = cplx(y[8 + i], y[8 + n + i]);
    auto dc = dencker_coefficients(d, y.head<4>(), y.segment<4>(4));
    VecXc dw = -(dc.B * w) / dc.c;
    for (int i = 0; i < n; ++i) {
      dy[8 + i] = dw[i].real();
      dy[8 + n + i] = dw[i].imag();
    }
  };
  OdeOptions opt;
  opt.rtol = options.rtol;
  opt.atol = options.atol;
  auto out = integrate_dopri5(rhs, y0, strip.tau, opt);

  PolarizedStrip ps;
  ps.kind = d.op.family == "dirac" ? FibreKind::Spinor
            : d.op.family == "dirac-adjoint" ? FibreKind::Cospinor
                                              : FibreKind::Vector;
  ps.strip.metric = spec;
  ps.strip.tau = strip.tau;
  ps.strip.hamiltonian = strip.hamiltonian;
  ps.strip.xi0_norm2 = strip.xi0_norm2;
  for (const auto& y : out) {
    PhasePoint p{y.head<4>(), y.segment<4>(4)};
    ps.strip.points.push_back(p);
    auto c = metric_at(spec, p.x, CacheLevel::Metric);
    ps.strip.q.push_back(p.xi.dot(c.g_inv * p.xi));
    VecXc w(n);
    for (int i = 0; i < n; ++i) w[i] = cplx(y[8 + i], y[8 + n + i]);
    ps.fibre.push_back(w);
  }
  return ps;
}

PolarizedStrip hamilton_orbit_bispinor(const DenckerSpec& left, const DenckerSpec& right, const BicharStrip& strip,
                                       const Mat4c& w0, const FlowOptions& options) {
  check_family(left);
  check_family(right);
  if (left.op.size != 4 || right.op.size != 4) throw Error(ErrorCode::InvalidArgument, "bispinor orbit needs 4x4 fibres");
  if (left.mode == TransportMode::Spin && right.mode == TransportMode::Spin)
    return transport_spinor(strip, w0, SpinorSide::BispinorBoth, options);
  if (strip.size() < 2) throw Error(ErrorCode::InvalidArgument, "strip has fewer than two samples");

  const auto& p0 = strip.points.front();
  Eigen::VectorXd y0(8 + 32);
  y0.head<4>() = p0.x;
  y0.segment<4>(4) = p0.xi;
  VecXc f0 = flatten(w0);
  for (int i = 0; i < 16; ++i) {
    y0[8 + i] = f0[i].real();
    y0[24 + i] = f0[i].imag();
  }
  const MetricSpec& spec = strip.metric;
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    geodesic_rhs(spec, y.data(), dy.data());
    VecXc f(16);
    for (int i = 0; i < 16; ++i) f[i] = cplx(y[8 + i], y[24 + i]);
    Mat4c W = unflatten(f);
    Vec4 x = y.head<4>(), xi = y.segment<4>(4);
    auto L = dencker_coefficients(left, x, xi);
    auto R = dencker_coefficients(right, x, xi);
    Mat4c dW = -(Mat4c(L.B) * W) / L.c - (W * Mat4c(R.B).transpose()) / R.c;
    VecXc df = flatten(dW);
    for (int i = 0; i < 16; ++i) {
      dy[8 + i] = df[i].real();
      dy[24 + i] = df[i].imag();
    }
  };
  OdeOptions opt;
  opt.rtol = options.rtol;
  opt.atol = options.atol;
  auto out = integrate_dopri5(rhs, y0, strip.tau, opt);

  PolarizedStrip ps;
  ps.kind = FibreKind::Bispinor;
  ps.strip.metric = spec;
  ps.strip.tau = strip.tau;
  ps.strip.hamiltonian = strip.hamiltonian;
  ps.strip.xi0_norm2 = strip.xi0_norm2;
  for (const auto& y : out) {
    PhasePoint p{y.head<4>(), y.segment<4>(4)};
    ps.strip.points.push_back(p);
    auto c = metric_at(spec, p.x, CacheLevel::Metric);
    ps.strip.q.push_back(p.xi.dot(c.g_inv * p.xi));
    VecXc f(16);
    for (int i = 0; i < 16; ++i) f[i] = cplx(y[8 + i], y[24 + i]);
    ps.fibre.push_back(f);
  }
  return ps;
}

}  // namespace microloc
