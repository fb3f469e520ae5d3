#include <random>

#include "doctest.h"
#include "microloc/error.hpp"
#include "microloc/flow.hpp"

using namespace microloc;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;  // sentinel, never expected below
}

// a spinor in ker slash(xi): slash(xi) chi, since slash^2 = xi^2 = 0
VecXc kernel_spinor(const MetricSpec& s, const PhasePoint& p, const Vec4c& chi) {
  auto gs = gamma_curved(metric_at(s, p.x, CacheLevel::Metric));
  return VecXc(slash(gs, p.xi) * chi);
}

const Vec4c kChi(cplx(1, 0.2), cplx(-0.3, 0.5), cplx(0.7, 0), cplx(0.1, -0.4));

}  // namespace

TEST_CASE("Minkowski bicharacteristics are straight lines") {
  auto m = MetricSpec::minkowski();
  PhasePoint p{Vec4(0.5, 1, 2, 3), Vec4(1, -0.6, -0.8, 0)};
  auto s = integrate_bicharacteristic(m, p, 0.0, 3.0, 30);
  REQUIRE(s.size() == 31);
  for (size_t k = 0; k < s.size(); ++k) {
    Vec4 expect = p.x + 2.0 * s.tau[k] * Vec4(1, 0.6, 0.8, 0);
    CHECK((s.points[k].x - expect).norm() < 1e-12);
    CHECK((s.points[k].xi - p.xi).norm() == 0.0);
  }
  CHECK(s.max_drift() < 1e-15);
}

TEST_CASE("Schwarzschild strips conserve q and the Killing momenta") {
  auto sch = MetricSpec::schwarzschild(1.0);
  Vec4 x(0, 8.0, 1.2, 0.3);
  Vec4 xi = null_covector(sch, x, Eigen::Vector3d(0.3, 0.5, 0.8));
  auto s = integrate_bicharacteristic(sch, {x, xi}, 0.0, 20.0, 200);
  CHECK(s.max_drift() < 1e-9);
  for (const auto& p : s.points) {
    CHECK(std::abs(p.xi[0] - xi[0]) < 1e-10 * std::abs(xi[0]));
    CHECK(std::abs(p.xi[3] - xi[3]) < 1e-10 * std::abs(xi[3]));
  }
  // compare with the second-order geodesic equation, raised tangent 2 g^{-1} xi
  auto c = metric_at(sch, x, CacheLevel::Metric);
  Vec4 v = 2.0 * c.g_inv * xi;
  // RK4 oracle with a fine fixed step
  auto accel = [&](const Vec4& y, const Vec4& u) {
    auto cc = metric_at(sch, y, CacheLevel::Connection);
    Vec4 a;
    for (int l = 0; l < 4; ++l) a[l] = -u.dot(cc.christoffel[l] * u);
    return a;
  };
  Vec4 y = x, u = v;
  double h = 1e-3;
  for (int i = 0; i < 5000; ++i) {
    Vec4 k1x = u, k1u = accel(y, u);
    Vec4 k2x = u + 0.5 * h * k1u, k2u = accel(y + 0.5 * h * k1x, k2x);
    Vec4 k3x = u + 0.5 * h * k2u, k3u = accel(y + 0.5 * h * k2x, k3x);
    Vec4 k4x = u + h * k3u, k4u = accel(y + h * k3x, k4x);
    y += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
  }
  CHECK((s.points[50].x - y).norm() < 1e-8);
}

TEST_CASE("photon sphere orbit persists for ten periods") {
  auto sch = MetricSpec::schwarzschild(1.0);
  PhasePoint p = photon_sphere_start(1.0);
  auto c = metric_at(sch, p.x, CacheLevel::Metric);
  double omega = 2.0 * (c.g_inv * p.xi)[3];  // dphi/dtau
  double period = 2 * kPi / std::abs(omega);
  auto s = integrate_bicharacteristic(sch, p, 0.0, 10.5 * period, 400);
  double worst = 0.0;
  for (const auto& q : s.points) worst = std::max(worst, std::abs(q.x[1] - 3.0));
  CHECK(worst < 1e-6);
  CHECK(std::abs(s.points.back().x[3]) > 20 * kPi);
  CHECK(s.max_drift() < 1e-9);
}

TEST_CASE("start and domain errors") {
  auto sch = MetricSpec::schwarzschild(1.0);
  CHECK(code_of([&] { integrate_bicharacteristic(sch, {Vec4(0, 6, 1, 0), Vec4(1, 0, 0, 0)}, 0, 1, 4); }) ==
        ErrorCode::NonNullStart);
  Vec4 x(0, 4.0, kPi / 2, 0);
  Vec4 in = null_covector(sch, x, Eigen::Vector3d(-1, 0, 0));
  CHECK(code_of([&] { integrate_bicharacteristic(sch, {x, in}, 0, 50, 10); }) == ErrorCode::LeftDomain);
}

TEST_CASE("Levi-Civita transport") {
  auto sch = MetricSpec::schwarzschild(1.0);
  Vec4 x(0, 7.0, 1.0, 0.2);
  Vec4 xi = null_covector(sch, x, Eigen::Vector3d(0.2, -0.7, 0.4));
  auto s = integrate_bicharacteristic(sch, {x, xi}, 0.0, 5.0, 50);
  VecXc w0(4);
  w0 << 0.3, cplx(0.1, 0.2), -0.4, 0.05;
  auto ps = transport_vector(s, w0);
  auto gww = [&](size_t k) {
    auto c = metric_at(sch, ps.strip.points[k].x, CacheLevel::Metric);
    return (ps.fibre[k].adjoint() * c.g.cast<cplx>() * ps.fibre[k])(0, 0);
  };
  auto gwx = [&](size_t k) { return (ps.strip.points[k].xi.cast<cplx>().transpose() * ps.fibre[k])(0, 0); };
  for (size_t k = 0; k < ps.fibre.size(); ++k) {
    CHECK(std::abs(gww(k) - gww(0)) < 1e-9);
    CHECK(std::abs(gwx(k) - gwx(0)) < 1e-9);  // g(w, x') with xi = g x' / 2
    CHECK((ps.strip.points[k].x - s.points[k].x).norm() < 1e-8);
  }
  auto flat = integrate_bicharacteristic(MetricSpec::minkowski(), {Vec4::Zero(), Vec4(1, 1, 0, 0)}, 0, 2, 10);
  auto pf = transport_vector(flat, w0);
  CHECK((pf.fibre.back() - w0).norm() < 1e-14);
}

TEST_CASE("spin transport keeps slash(xi) chi in the kernel") {
  auto sch = MetricSpec::schwarzschild(1.0);
  Vec4 x(0, 6.0, 1.3, 0.0);
  PhasePoint p{x, null_covector(sch, x, Eigen::Vector3d(0.5, 0.5, -0.2))};
  auto s = integrate_bicharacteristic(sch, p, 0.0, 4.0, 40);
  auto dirac = dirac_operator(sch, 0.5);
  auto ps = transport_spinor(s, kernel_spinor(sch, p, kChi), SpinorSide::Spinor);
  for (size_t k = 0; k < ps.fibre.size(); ++k)
    CHECK(kernel_residual(dirac, ps.strip.points[k].x, ps.strip.points[k].xi, ps.fibre[k]) < 1e-8);
  // the bispinor transport of slash(xi) is slash(xi) along the strip
  auto gs0 = gamma_curved(metric_at(sch, x, CacheLevel::Metric));
  auto pb = transport_spinor(s, slash(gs0, p.xi), SpinorSide::BispinorBoth);
  for (size_t k = 0; k < pb.fibre.size(); ++k) {
    const auto& q = pb.strip.points[k];
    Mat4c expect = slash(gamma_curved(metric_at(sch, q.x, CacheLevel::Metric)), q.xi);
    CHECK((pb.bispinor(k) - expect).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("Dencker derivative of geometric transports vanishes") {
  struct Case {
    MetricSpec spec;
    Vec4 x;
  };
  for (const auto& cs : {Case{MetricSpec::schwarzschild(1.0), Vec4(0, 6.0, 1.3, 0.0)},
                         Case{MetricSpec::frw_power(1.0, 0.5), Vec4(1.0, 0.1, 0.2, -0.3)}}) {
    PhasePoint p{cs.x, null_covector(cs.spec, cs.x, Eigen::Vector3d(0.5, 0.5, -0.2))};
    auto s = integrate_bicharacteristic(cs.spec, p, 0.0, 1.0, 200);

    auto dirac = make_dencker(dirac_operator(cs.spec, 0.7), TransportMode::Spin);
    auto ps = hamilton_orbit(dirac, s, kernel_spinor(cs.spec, p, kChi));
    double worst = 0.0;
    for (const auto& v : dencker_derivative(dirac, ps.strip, ps.fibre)) worst = std::max(worst, v.norm());
    MESSAGE("dirac spin: " << worst);
    CHECK(worst < 1e-5);

    auto adj = make_dencker(dirac_adjoint_operator(cs.spec, 0.7), TransportMode::Spin);
    auto gs = gamma_curved(metric_at(cs.spec, p.x, CacheLevel::Metric));
    VecXc c0 = slash(gs, p.xi).transpose() * kChi;
    auto pa = hamilton_orbit(adj, s, c0);
    worst = 0.0;
    for (const auto& v : dencker_derivative(adj, pa.strip, pa.fibre)) worst = std::max(worst, v.norm());
    MESSAGE("adjoint spin: " << worst);
    CHECK(worst < 1e-5);

    auto maxwell = make_dencker(maxwell_lorentz_operator(cs.spec), TransportMode::LeviCivita);
    VecXc a0(4);
    a0 << 0.2, cplx(0, 1), 0.5, -0.3;
    auto pm = hamilton_orbit(maxwell, s, a0);
    worst = 0.0;
    for (const auto& v : dencker_derivative(maxwell, pm.strip, pm.fibre)) worst = std::max(worst, v.norm());
    MESSAGE("maxwell levi-civita: " << worst);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("generic Dencker orbits agree with the geometric transports") {
  auto sch = MetricSpec::schwarzschild(1.0);
  Vec4 x(0, 6.0, 1.3, 0.0);
  PhasePoint p{x, null_covector(sch, x, Eigen::Vector3d(0.5, 0.5, -0.2))};
  auto s = integrate_bicharacteristic(sch, p, 0.0, 2.0, 20);
  VecXc w0 = kernel_spinor(sch, p, kChi);

  auto spin = hamilton_orbit(make_dencker(dirac_operator(sch, 0.7), TransportMode::Spin), s, w0);
  auto gen = hamilton_orbit(make_dencker(dirac_operator(sch, 0.7), TransportMode::Generic), s, w0);
  double worst = 0.0;
  for (size_t k = 0; k < s.size(); ++k) worst = std::max(worst, projective_distance(spin.fibre[k], gen.fibre[k]));
  MESSAGE("dirac generic vs spin: " << worst);
  CHECK(worst < 1e-5);

  // the mass enters only through p^s = m 1, which drops out projectively
  auto gen0 = hamilton_orbit(make_dencker(dirac_operator(sch, 0.0), TransportMode::Generic), s, w0);
  auto gen2 = hamilton_orbit(make_dencker(dirac_operator(sch, 2.0), TransportMode::Generic), s, w0);
  worst = 0.0;
  for (size_t k = 0; k < s.size(); ++k) worst = std::max(worst, projective_distance(gen0.fibre[k], gen2.fibre[k]));
  MESSAGE("mass dependence: " << worst);
  CHECK(worst < 1e-8);

  VecXc a0(4);
  a0 << 0.2, cplx(0, 1), 0.5, -0.3;
  auto lc = hamilton_orbit(make_dencker(maxwell_lorentz_operator(sch), TransportMode::LeviCivita), s, a0);
  auto gm = hamilton_orbit(make_dencker(maxwell_lorentz_operator(sch), TransportMode::Generic), s, a0);
  worst = 0.0;
  for (size_t k = 0; k < s.size(); ++k) worst = std::max(worst, projective_distance(lc.fibre[k], gm.fibre[k]));
  MESSAGE("maxwell generic vs levi-civita: " << worst);
  CHECK(worst < 1e-5);

  auto gs = gamma_curved(metric_at(sch, x, CacheLevel::Metric));
  Mat4c W0 = slash(gs, p.xi) * kChi * kChi.transpose() * slash(gs, p.xi);
  auto L = make_dencker(dirac_operator(sch, 0.7), TransportMode::Generic);
  auto R = make_dencker(dirac_adjoint_operator(sch, 0.7), TransportMode::Generic);
  auto bg = hamilton_orbit_bispinor(L, R, s, W0);
  auto bs = transport_spinor(s, W0, SpinorSide::BispinorBoth);
  worst = 0.0;
  for (size_t k = 0; k < s.size(); ++k) worst = std::max(worst, projective_distance(bg.fibre[k], bs.fibre[k]));
  MESSAGE("bispinor generic vs spin: " << worst);
  CHECK(worst < 1e-5);
}

TEST_CASE("kernel violations are reported") {
  auto sch = MetricSpec::schwarzschild(1.0);
  Vec4 x(0, 6.0, 1.3, 0.0);
  PhasePoint p{x, null_covector(sch, x, Eigen::Vector3d(1, 0, 0))};
  auto s = integrate_bicharacteristic(sch, p, 0.0, 1.0, 10);
  auto d = make_dencker(dirac_operator(sch, 1.0), TransportMode::Spin);
  std::vector<VecXc> w(s.size(), VecXc(kChi));
  CHECK(code_of([&] { dencker_derivative(d, s, w); }) == ErrorCode::KernelViolation);
  CHECK(code_of([&] { hamilton_orbit(d, s, VecXc(kChi)); }) == ErrorCode::KernelViolation);
}

TEST_CASE("projective comparisons") {
  VecXc a(3);
  a << 1, cplx(0, 2), -1;
  CHECK(projective_distance(a, cplx(0.3, -2) * a) < 1e-15);
  CHECK(ray_angle(a, cplx(0.3, -2) * a) < 1e-15);
  VecXc b(3);
  b << 1, 0, 0;
  VecXc c(3);
  c << 0, 1, 0;
  CHECK(ray_angle(b, c) == doctest::Approx(std::sqrt(2.0)));
  CHECK(projective_distance(b, c) == doctest::Approx(1.0));
  Mat4c m = Mat4c::Random();
  CHECK(unflatten(flatten(m)) == m);
}
