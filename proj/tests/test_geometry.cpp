#include <random>

#include "doctest.h"
#include "microloc/geometry.hpp"
#include "oracles.hpp"

using namespace microloc;

TEST_CASE("Schwarzschild connection matches finite-difference oracle") {
  auto spec = MetricSpec::schwarzschild(1.0);
  Vec4 x(0.0, 10.0, kPi / 2, 0.0);
  auto c = metric_at(spec, x);
  CHECK(c.christoffel[1](0, 0) == doctest::Approx(0.008).epsilon(1e-12));
  auto G = oracle::christoffel_fd([](const Vec4& p) { return oracle::schwarzschild_metric(1.0, p); }, x);
  for (int l = 0; l < 4; ++l) CHECK((c.christoffel[l] - G[l]).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("FRW with a=t has Gamma^t_xx = a a' = 2 at t=2") {
  auto spec = MetricSpec::frw_power(1.0, 1.0);
  auto c = metric_at(spec, Vec4(2.0, 0.3, -0.1, 0.7));
  CHECK(c.christoffel[0](1, 1) == doctest::Approx(2.0).epsilon(1e-14));
  auto G = oracle::christoffel_fd([](const Vec4& p) { return oracle::frw_metric([](double t) { return t; }, p); },
                                  Vec4(2.0, 0.3, -0.1, 0.7));
  for (int l = 0; l < 4; ++l) CHECK((c.christoffel[l] - G[l]).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("Minkowski is flat") {
  auto c = metric_at(MetricSpec::minkowski(), Vec4(1, 2, 3, 4));
  for (int l = 0; l < 4; ++l) CHECK(c.christoffel[l].isZero(0.0));
  CHECK(c.scalar_curvature == 0.0);
  CHECK(c.tetrad.isIdentity(0.0));
}

TEST_CASE("cache invariants at random points") {
  std::mt19937_64 rng(7);
  for (auto spec : {MetricSpec::minkowski(), MetricSpec::schwarzschild(1.0), MetricSpec::frw_power(1.0, 0.5),
                    MetricSpec::frw_exponential(1.0, 0.7)}) {
    for (int i = 0; i < 20; ++i) {
      Vec4 x = spec.sample_point(rng);
      auto c = metric_at(spec, x);
      CHECK((c.g_inv * c.g - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((c.tetrad.transpose() * c.g * c.tetrad - eta()).cwiseAbs().maxCoeff() < 1e-10);
      for (int l = 0; l < 4; ++l) CHECK((c.christoffel[l] - c.christoffel[l].transpose()).norm() < 1e-14);
      // metric compatibility
      for (int l = 0; l < 4; ++l)
        for (int m = 0; m < 4; ++m)
          for (int n = 0; n < 4; ++n) {
            double v = c.dg[l](m, n);
            for (int r = 0; r < 4; ++r) v -= c.christoffel[r](l, m) * c.g(r, n) + c.christoffel[r](l, n) * c.g(m, r);
            CHECK(std::abs(v) < 1e-10 * (1 + c.dg[l].cwiseAbs().maxCoeff()));
          }
    }
  }
}

TEST_CASE("Schwarzschild curvature: Ricci flat, Kretschmann 48 M^2 / r^6") {
  auto spec = MetricSpec::schwarzschild(1.5);
  Vec4 x(0.0, 7.0, 1.1, 0.4);
  auto c = metric_at(spec, x);
  CHECK(c.ricci.cwiseAbs().maxCoeff() < 1e-12);
  // K = R_abcd R^abcd
  double K = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
          double low = 0;  // R_abmn
          for (int r = 0; r < 4; ++r) low += c.g(a, r) * c.riemann_at(r, b, m, n);
          double up = 0;  // R^a b^m n^... raise b, m, n
          for (int bb = 0; bb < 4; ++bb)
            for (int mm = 0; mm < 4; ++mm)
              for (int nn = 0; nn < 4; ++nn)
                up += c.g_inv(b, bb) * c.g_inv(m, mm) * c.g_inv(n, nn) * c.riemann_at(a, bb, mm, nn);
          K += low * up;
        }
  CHECK(K == doctest::Approx(48 * 1.5 * 1.5 / std::pow(7.0, 6)).epsilon(1e-10));
}

TEST_CASE("FRW scalar curvature magnitude 6(a''/a + (a'/a)^2)") {
  double p = 0.5, t = 1.7;
  auto c = metric_at(MetricSpec::frw_power(1.0, p), Vec4(t, 0, 0, 0));
  double a = std::pow(t, p), ad = p * std::pow(t, p - 1), add = p * (p - 1) * std::pow(t, p - 2);
  CHECK(std::abs(c.scalar_curvature) == doctest::Approx(6 * (add / a + ad * ad / (a * a))).epsilon(1e-10));
}

TEST_CASE("custom metric reproduces the built-in Schwarzschild chart") {
  auto custom = MetricSpec::custom({"t", "r", "θ", "φ"},
                                   {{"00", "1 - 2*M/r"}, {"11", "-1/(1 - 2*M/r)"}, {"22", "-r^2"},
                                    {"33", "-r^2*sin(θ)^2"}},
                                   {{"M", 1.0}});
  auto builtin = MetricSpec::schwarzschild(1.0);
  Vec4 x(0.2, 6.5, 0.9, 2.0);
  auto a = metric_at(custom, x), b = metric_at(builtin, x);
  CHECK((a.g - b.g).cwiseAbs().maxCoeff() < 1e-14);
  for (int l = 0; l < 4; ++l) CHECK((a.christoffel[l] - b.christoffel[l]).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(std::abs(a.scalar_curvature - b.scalar_curvature) < 1e-12);
}

TEST_CASE("expression errors carry a column") {
  try {
    Expression::parse("1 + * t", {"t", "x", "y", "z"});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("column") != std::string::npos);
  }
  CHECK_THROWS_AS(Expression::parse("foo(t)", {"t"}), Error);
  auto e = Expression::parse("-x^2 + 2^-1", {"x"});
  CHECK(e.eval<double>({-3.0, 0, 0, 0}) == doctest::Approx(-8.5));
}

TEST_CASE("domain and degeneracy errors") {
  auto s = MetricSpec::schwarzschild(1.0);
  CHECK_THROWS_AS(metric_at(s, Vec4(0, 2.0, 1.0, 0)), Error);
  try {
    metric_at(s, Vec4(0, 1.5, 1.0, 0));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfDomain);
  }
  auto degenerate = MetricSpec::custom({"t", "x", "y", "z"}, {{"00", "1"}, {"11", "-1"}, {"22", "-1"}});
  try {
    metric_at(degenerate, Vec4(0, 0, 0, 0));
    FAIL("expected DegenerateMetric");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateMetric);
  }
}

TEST_CASE("causal classification") {
  auto c = metric_at(MetricSpec::minkowski(), Vec4::Zero());
  CHECK(classify_covector(c, Vec4(1, 0, 0, 0)) == CausalClass::TimelikeFuture);
  CHECK(classify_covector(c, Vec4(1, -1, 0, 0)) == CausalClass::NullFuture);
  CHECK(classify_covector(c, Vec4(0, 1, 0, 0)) == CausalClass::Spacelike);
  CHECK(classify_covector(c, Vec4(-1, 0.2, 0, 0)) == CausalClass::TimelikePast);
  CHECK(classify_covector(c, Vec4::Zero()) == CausalClass::Zero);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  auto s = metric_at(MetricSpec::schwarzschild(1.0), Vec4(0, 5, 1, 1));
  for (int i = 0; i < 100; ++i) {
    Vec4 xi(n(rng), n(rng), n(rng), n(rng));
    for (double t : {1e-3, 0.5, 7.0, 1e4}) CHECK(classify_covector(s, t * xi) == classify_covector(s, xi));
  }
}

TEST_CASE("Minkowski sigma and null connection") {
  auto m = MetricSpec::minkowski();
  CHECK(sigma_quadratic_distance(m, Vec4(0, 1, 0, 0), Vec4::Zero()) == -1.0);
  CHECK(sigma_quadratic_distance(m, Vec4(2, 1, 0, 0), Vec4::Zero()) == 3.0);
  auto nc = geodesic_connect(m, Vec4::Zero(), Vec4(1, 1, 0, 0));
  REQUIRE(nc);
  CHECK((nc->xi - Vec4(1, -1, 0, 0)).norm() < 1e-15);
  CHECK(nc->y_in_future);
  CHECK_FALSE(geodesic_connect(m, Vec4::Zero(), Vec4(0, 1, 0, 0)));
}

TEST_CASE("Schwarzschild radial null ray matches the tortoise-coordinate oracle") {
  double M = 1.0;
  auto s = MetricSpec::schwarzschild(M);
  double r0 = 10, r1 = 12;
  Vec4 x(0, r0, kPi / 2, 0.3);
  Vec4 y(oracle::tortoise(M, r1) - oracle::tortoise(M, r0), r1, kPi / 2, 0.3);
  auto nc = geodesic_connect(s, x, y);
  REQUIRE(nc);
  double f = 1 - 2 * M / r0;
  CHECK((nc->xi - Vec4(f, -1, 0, 0)).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(nc->y_in_future);
  // ingoing from y back to x is past-directed from y's viewpoint
  auto back = geodesic_connect(s, y, x);
  REQUIRE(back);
  CHECK_FALSE(back->y_in_future);
}

TEST_CASE("Schwarzschild sigma agrees with an independent RK4 shooter, and is symmetric") {
  auto s = MetricSpec::schwarzschild(1.0);
  Vec4 x(0.0, 8.0, 1.2, 0.5), y(0.6, 8.4, 1.25, 0.62);
  double sig = sigma_quadratic_distance(s, x, y);
  double ref = oracle::sigma_bvp([](const Vec4& p) { return oracle::schwarzschild_metric(1.0, p); }, x, y, 400);
  CHECK(std::abs(sig - ref) < 1e-6 * std::abs(ref));
  CHECK(std::abs(sig - sigma_quadratic_distance(s, y, x)) < 1e-9 * std::abs(sig));
}
