#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "microloc/dual.hpp"
#include "microloc/error.hpp"
#include "microloc/expression.hpp"
#include "microloc/types.hpp"

namespace microloc {

struct Minkowski {};

struct Schwarzschild {
  double mass = 1.0;
};

struct FrwFlat {
  enum class Family { Power, Exponential };
  Family family = Family::Power;
  double a0 = 1.0;
  double parameter = 1.0;  // exponent p for Power, Hubble rate H for Exponential
};

struct CustomMetric {
  std::vector<std::string> coordinates;  // four names, e.g. t,x,y,z
  // upper triangle in row order: 00 01 02 03 11 12 13 22 23 33
  std::array<Expression, 10> components;
};

// A spacetime chart with signature (+,-,-,-).
class MetricSpec {
 public:
  using Kind = std::variant<Minkowski, Schwarzschild, FrwFlat, CustomMetric>;

  MetricSpec() = default;
  explicit MetricSpec(Kind kind, std::string chart = {});

  static MetricSpec minkowski();
  static MetricSpec schwarzschild(double mass);
  static MetricSpec frw_power(double a0, double exponent);
  static MetricSpec frw_exponential(double a0, double hubble);
  // components keyed "00","01",... (missing entries are zero); coordinates
  // are the four chart names used inside the expressions.
  static MetricSpec custom(const std::vector<std::string>& coordinates,
                           const std::map<std::string, std::string>& components,
                           const std::map<std::string, double>& constants = {});

  const Kind& kind() const { return kind_; }
  const std::string& chart() const { return chart_; }
  std::string name() const;
  bool is_minkowski() const { return std::holds_alternative<Minkowski>(kind_); }
  bool is_schwarzschild() const { return std::holds_alternative<Schwarzschild>(kind_); }

  // Throws OutOfDomain if x lies outside the chart domain.
  void check_domain(const Vec4& x) const;
  bool in_domain(const Vec4& x) const;

  template <class T>
  void lower(const std::array<T, 4>& x, T g[4][4]) const;

  // A representative random point inside the domain, used by property tests.
  Vec4 sample_point(std::mt19937_64& rng) const;

 private:
  Kind kind_ = Minkowski{};
  std::string chart_ = "cartesian t,x,y,z";
};

template <class T>
void MetricSpec::lower(const std::array<T, 4>& x, T g[4][4]) const {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g[i][j] = T(0.0);
  if (std::holds_alternative<Minkowski>(kind_)) {
    g[0][0] = T(1.0);
    g[1][1] = g[2][2] = g[3][3] = T(-1.0);
  } else if (const auto* s = std::get_if<Schwarzschild>(&kind_)) {
    const T& r = x[1];
    T f = 1.0 - 2.0 * s->mass / r;
    T st = sin(x[2]);
    g[0][0] = f;
    g[1][1] = -1.0 / f;
    g[2][2] = -(r * r);
    g[3][3] = -(r * r * st * st);
  } else if (const auto* f = std::get_if<FrwFlat>(&kind_)) {
    T a = f->family == FrwFlat::Family::Power ? f->a0 * real_pow(x[0], f->parameter)
                                              : f->a0 * exp(f->parameter * x[0]);
    g[0][0] = T(1.0);
    g[1][1] = g[2][2] = g[3][3] = -(a * a);
  } else {
    const auto& c = std::get<CustomMetric>(kind_);
    int k = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j, ++k) {
        g[i][j] = c.components[k].eval(x);
        g[j][i] = g[i][j];
      }
  }
}

enum class CacheLevel { Metric, Connection, Curvature };

struct GeometryCache {
  Vec4 point = Vec4::Zero();
  CacheLevel level = CacheLevel::Metric;
  Mat4 g = Mat4::Zero();
  Mat4 g_inv = Mat4::Zero();
  double det_g = 0.0;
  std::array<Mat4, 4> dg{};           // dg[l](m,n) = d_l g_mn
  std::array<Mat4, 4> christoffel{};  // christoffel[l](m,n) = Gamma^l_mn
  std::array<std::array<Mat4, 4>, 4> dchristoffel{};  // dchristoffel[k][l](m,n) = d_k Gamma^l_mn
  std::array<double, 256> riemann{};  // R^r_smn at index ((r*4+s)*4+m)*4+n
  Mat4 ricci = Mat4::Zero();
  double scalar_curvature = 0.0;
  Mat4 tetrad = Mat4::Identity();     // tetrad(mu,a) = e^mu_a
  Mat4 coframe = Mat4::Identity();    // coframe(a,mu), inverse of tetrad
  std::array<Mat4, 4> dtetrad{};      // dtetrad[l](mu,a) = d_l e^mu_a

  double riemann_at(int r, int s, int m, int n) const { return riemann[((r * 4 + s) * 4 + m) * 4 + n]; }
  double sqrt_minus_g() const { return std::sqrt(-det_g); }
};

GeometryCache metric_at(const MetricSpec& spec, const Vec4& x, CacheLevel level = CacheLevel::Curvature);

// g and its first derivatives only; the hot path of the geodesic flow.
void metric_with_derivatives(const MetricSpec& spec, const Vec4& x, Mat4& g, std::array<Mat4, 4>& dg);

// Gram-Schmidt from d_t, templated so the tetrad can be differentiated.
template <class T>
bool gram_schmidt_tetrad(const T g[4][4], T e[4][4]);

const Mat4& eta();

enum class CausalClass { TimelikeFuture, TimelikePast, NullFuture, NullPast, Spacelike, Zero };
const char* to_string(CausalClass c);

CausalClass classify_covector(const GeometryCache& cache, const Vec4& xi, double null_tol = 1e-10);

struct PhasePoint {
  Vec4 x = Vec4::Zero();
  Vec4 xi = Vec4::Zero();
};

// Raise with g^{-1}; scale so the raised time component is +1 (or -1 for past).
Vec4 raise(const GeometryCache& cache, const Vec4& xi);
Vec4 future_normalize(const GeometryCache& cache, const Vec4& xi);

// Hamiltonian q = g^{mn} xi_m xi_n; state (x, xi) packed in 8 reals.
void geodesic_rhs(const MetricSpec& spec, const double* state, double* dstate);

struct BvpOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;
  double null_tolerance = 1e-7;  // relative |g(v,v)| / |v|^2 for calling a pair null
  int curve_samples = 65;
};

struct GeodesicSolution {
  Vec4 launch_vector;    // dx/dtau at x for tau in [0,1], tangent of the physical geodesic
  Vec4 launch_covector;  // g v, the metric-lowered tangent
  double sigma = 0.0;    // g(v,v)
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> tau;
  std::vector<PhasePoint> curve;
};

// Shooting in the affine parameter on [0,1] from x to y.
GeodesicSolution solve_geodesic_bvp(const MetricSpec& spec, const Vec4& x, const Vec4& y,
                                    const BvpOptions& options = {});

struct NullConnection {
  Vec4 xi;               // future-normalized launch covector at x (raised time component +1)
  Vec4 eta;              // the same geodesic's covector at y, equally scaled
  bool y_in_future = true;  // y in J^+(x)
  double affine_length = 0.0;  // parameter length with the normalized covector
  std::vector<double> tau;
  std::vector<PhasePoint> curve;
};

std::optional<NullConnection> geodesic_connect(const MetricSpec& spec, const Vec4& x, const Vec4& y,
                                               const BvpOptions& options = {});

double sigma_quadratic_distance(const MetricSpec& spec, const Vec4& x, const Vec4& y,
                                const BvpOptions& options = {});

}  // namespace microloc
