#include "microloc/geometry.hpp"

#include <cmath>
#include <sstream>

namespace microloc {

namespace {

using D1 = Dual<double>;
using D2 = Dual<D1>;

constexpr double kHorizonMargin = 1e-6;

}  // namespace

MetricSpec::MetricSpec(Kind kind, std::string chart) : kind_(std::move(kind)), chart_(std::move(chart)) {
  if (chart_.empty()) {
    chart_ = std::holds_alternative<Schwarzschild>(kind_) ? "spherical t,r,theta,phi" : "cartesian t,x,y,z";
  }
}

MetricSpec MetricSpec::minkowski() { return MetricSpec(Minkowski{}); }

MetricSpec MetricSpec::schwarzschild(double mass) {
  if (!(mass > 0)) throw Error(ErrorCode::InvalidArgument, "Schwarzschild mass must be positive");
  return MetricSpec(Schwarzschild{mass});
}

MetricSpec MetricSpec::frw_power(double a0, double exponent) {
  if (!(a0 > 0)) throw Error(ErrorCode::InvalidArgument, "scale factor a0 must be positive");
  return MetricSpec(FrwFlat{FrwFlat::Family::Power, a0, exponent});
}

MetricSpec MetricSpec::frw_exponential(double a0, double hubble) {
  if (!(a0 > 0)) throw Error(ErrorCode::InvalidArgument, "scale factor a0 must be positive");
  return MetricSpec(FrwFlat{FrwFlat::Family::Exponential, a0, hubble});
}

MetricSpec MetricSpec::custom(const std::vector<std::string>& coordinates,
                              const std::map<std::string, std::string>& components,
                              const std::map<std::string, double>& constants) {
  if (coordinates.size() != 4) throw Error(ErrorCode::ConfigError, "custom metric needs four coordinate names");
  CustomMetric c;
  c.coordinates = coordinates;
  for (auto& e : c.components) e = Expression::constant(0.0);
  for (const auto& [key, text] : components) {
    if (key.size() != 2 || key[0] < '0' || key[0] > '3' || key[1] < '0' || key[1] > '3')
      throw Error(ErrorCode::ConfigError, "bad metric component index '" + key + "'");
    int i = key[0] - '0', j = key[1] - '0';
    if (i > j) std::swap(i, j);
    int k = i * 4 - i * (i - 1) / 2 + (j - i);
    c.components[k] = Expression::parse(text, coordinates, constants);
  }
  std::string chart = "custom " + coordinates[0] + "," + coordinates[1] + "," + coordinates[2] + "," + coordinates[3];
  return MetricSpec(std::move(c), chart);
}

std::string MetricSpec::name() const {
  std::ostringstream os;
  os.precision(17);
  if (std::holds_alternative<Minkowski>(kind_)) return "minkowski";
  if (const auto* s = std::get_if<Schwarzschild>(&kind_)) {
    os << "schwarzschild(M=" << s->mass << ")";
  } else if (const auto* f = std::get_if<FrwFlat>(&kind_)) {
    if (f->family == FrwFlat::Family::Power) os << "frw-flat(power a0=" << f->a0 << " p=" << f->parameter << ")";
    else os << "frw-flat(exp a0=" << f->a0 << " H=" << f->parameter << ")";
  } else {
    os << "custom";
  }
  return os.str();
}

void MetricSpec::check_domain(const Vec4& x) const {
  if (!x.allFinite()) throw Error(ErrorCode::OutOfDomain, "non-finite coordinates");
  if (const auto* s = std::get_if<Schwarzschild>(&kind_)) {
    if (!(x[1] > 2.0 * s->mass * (1.0 + kHorizonMargin)))
      throw Error(ErrorCode::OutOfDomain, "r must exceed 2M(1+1e-6)");
    if (!(std::abs(std::sin(x[2])) > 1e-12)) throw Error(ErrorCode::OutOfDomain, "theta on the polar axis");
  } else if (const auto* f = std::get_if<FrwFlat>(&kind_)) {
    if (f->family == FrwFlat::Family::Power && !(x[0] > 0))
      throw Error(ErrorCode::OutOfDomain, "power-law FRW requires t > 0");
  }
}

bool MetricSpec::in_domain(const Vec4& x) const {
  try {
    check_domain(x);
    return true;
  } catch (const Error&) {
    return false;
  }
}

Vec4 MetricSpec::sample_point(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto lerp = [&](double a, double b) { return a + (b - a) * u(rng); };
  if (std::holds_alternative<Minkowski>(kind_)) return Vec4(lerp(-5, 5), lerp(-5, 5), lerp(-5, 5), lerp(-5, 5));
  if (const auto* s = std::get_if<Schwarzschild>(&kind_)) {
    return Vec4(lerp(-5, 5), s->mass * lerp(3, 20), lerp(0.3, kPi - 0.3), lerp(0, 2 * kPi));
  }
  if (std::holds_alternative<FrwFlat>(kind_)) return Vec4(lerp(0.5, 3), lerp(-2, 2), lerp(-2, 2), lerp(-2, 2));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vec4 x(lerp(-1, 1), lerp(-1, 1), lerp(-1, 1), lerp(-1, 1));
    try {
      metric_at(*this, x, CacheLevel::Metric);
      return x;
    } catch (const Error&) {
    }
  }
  throw Error(ErrorCode::OutOfDomain, "could not find a valid sample point for custom metric");
}

const Mat4& eta() {
  static const Mat4 e = Vec4(1, -1, -1, -1).asDiagonal();
  return e;
}

template <class T>
bool gram_schmidt_tetrad(const T g[4][4], T e[4][4]) {
  static const double sign[4] = {1, -1, -1, -1};
  for (int a = 0; a < 4; ++a) {
    T v[4];
    for (int m = 0; m < 4; ++m) v[m] = T(m == a ? 1.0 : 0.0);
    for (int b = 0; b < a; ++b) {
      // projection onto e_b: eta_bb g(v, e_b) e_b
      T dot(0.0);
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) dot += g[m][n] * v[m] * e[n][b];
      dot = dot * sign[b];
      for (int m = 0; m < 4; ++m) v[m] -= dot * e[m][b];
    }
    T norm(0.0);
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) norm += g[m][n] * v[m] * v[n];
    T n2 = norm * sign[a];
    if (!(value_of(n2) > 1e-300)) return false;
    T inv = 1.0 / sqrt(n2);
    for (int m = 0; m < 4; ++m) e[m][a] = v[m] * inv;
  }
  return true;
}

template bool gram_schmidt_tetrad<double>(const double[4][4], double[4][4]);
template bool gram_schmidt_tetrad<D1>(const D1[4][4], D1[4][4]);

void metric_with_derivatives(const MetricSpec& spec, const Vec4& x, Mat4& g, std::array<Mat4, 4>& dg) {
  spec.check_domain(x);
  for (int l = 0; l < 4; ++l) {
    std::array<D1, 4> xd;
    for (int i = 0; i < 4; ++i) xd[i] = D1(x[i], i == l ? 1.0 : 0.0);
    D1 gd[4][4];
    spec.lower(xd, gd);
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        if (l == 0) g(m, n) = gd[m][n].v;
        dg[l](m, n) = gd[m][n].d;
      }
  }
}

namespace {

void finish_metric(GeometryCache& c) {
  if (!c.g.allFinite()) throw Error(ErrorCode::OutOfDomain, "metric not finite at point");
  c.det_g = c.g.determinant();
  double scale = c.g.cwiseAbs().maxCoeff();
  if (!(std::abs(c.det_g) > 1e-14 * std::pow(scale, 4)) || !(c.det_g < 0))
    throw Error(ErrorCode::DegenerateMetric, "metric degenerate or of wrong signature at point");
  c.g_inv = c.g.inverse();
}

}  // namespace

GeometryCache metric_at(const MetricSpec& spec, const Vec4& x, CacheLevel level) {
  spec.check_domain(x);
  GeometryCache c;
  c.point = x;
  c.level = level;

  // Dual<double> metric along each coordinate, from either nested or flat AD
  std::array<std::array<std::array<D1, 4>, 4>, 4> gdir;  // gdir[l][m][n] = (g_mn, d_l g_mn)
  std::array<std::array<Mat4, 4>, 4> d2g{};               // d2g[k][l] = d_k d_l g

  if (level == CacheLevel::Curvature) {
    for (int k = 0; k < 4; ++k)
      for (int l = k; l < 4; ++l) {
        std::array<D2, 4> xd;
        for (int i = 0; i < 4; ++i) xd[i] = D2(D1(x[i], i == l ? 1.0 : 0.0), D1(i == k ? 1.0 : 0.0, 0.0));
        D2 gd[4][4];
        spec.lower(xd, gd);
        for (int m = 0; m < 4; ++m)
          for (int n = 0; n < 4; ++n) {
            if (k == l) gdir[l][m][n] = gd[m][n].v;
            d2g[k][l](m, n) = gd[m][n].d.d;
          }
        if (k != l) d2g[l][k] = d2g[k][l];
      }
  } else if (level == CacheLevel::Connection) {
    for (int l = 0; l < 4; ++l) {
      std::array<D1, 4> xd;
      for (int i = 0; i < 4; ++i) xd[i] = D1(x[i], i == l ? 1.0 : 0.0);
      D1 gd[4][4];
      spec.lower(xd, gd);
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) gdir[l][m][n] = gd[m][n];
    }
  }

  if (level == CacheLevel::Metric) {
    std::array<double, 4> xv{x[0], x[1], x[2], x[3]};
    double gd[4][4];
    spec.lower(xv, gd);
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) c.g(m, n) = gd[m][n];
  } else {
    for (int l = 0; l < 4; ++l)
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
          c.g(m, n) = gdir[0][m][n].v;
          c.dg[l](m, n) = gdir[l][m][n].d;
        }
  }
  finish_metric(c);

  // tetrad, and its derivatives through the AD metric
  {
    double gd[4][4], e[4][4];
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) gd[m][n] = c.g(m, n);
    if (!gram_schmidt_tetrad(gd, e)) throw Error(ErrorCode::DegenerateMetric, "d_t is not timelike; no tetrad");
    for (int m = 0; m < 4; ++m)
      for (int a = 0; a < 4; ++a) c.tetrad(m, a) = e[m][a];
    c.coframe = c.tetrad.inverse();
  }
  if (level == CacheLevel::Metric) return c;

  for (int l = 0; l < 4; ++l) {
    D1 gd[4][4], e[4][4];
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) gd[m][n] = gdir[l][m][n];
    gram_schmidt_tetrad(gd, e);
    for (int m = 0; m < 4; ++m)
      for (int a = 0; a < 4; ++a) c.dtetrad[l](m, a) = e[m][a].d;
  }

  // Gamma^l_mn = 1/2 g^{lr} (d_m g_rn + d_n g_rm - d_r g_mn)
  std::array<std::array<std::array<double, 4>, 4>, 4> lowered{};  // Gamma_{r mn}
  for (int r = 0; r < 4; ++r)
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n)
        lowered[r][m][n] = 0.5 * (c.dg[m](r, n) + c.dg[n](r, m) - c.dg[r](m, n));
  for (int l = 0; l < 4; ++l)
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        double s = 0.0;
        for (int r = 0; r < 4; ++r) s += c.g_inv(l, r) * lowered[r][m][n];
        c.christoffel[l](m, n) = s;
      }
  if (level == CacheLevel::Connection) return c;

  // d_k Gamma^l_mn = d_k g^{lr} Gamma_{r mn} + g^{lr} d_k Gamma_{r mn}
  for (int k = 0; k < 4; ++k) {
    Mat4 dginv = -c.g_inv * c.dg[k] * c.g_inv;
    for (int l = 0; l < 4; ++l)
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
          double s = 0.0;
          for (int r = 0; r < 4; ++r) {
            double dlow = 0.5 * (d2g[k][m](r, n) + d2g[k][n](r, m) - d2g[k][r](m, n));
            s += dginv(l, r) * lowered[r][m][n] + c.g_inv(l, r) * dlow;
          }
          c.dchristoffel[k][l](m, n) = s;
        }
  }

  // R^r_smn = d_m Gamma^r_ns - d_n Gamma^r_ms + Gamma^r_ml Gamma^l_ns - Gamma^r_nl Gamma^l_ms
  for (int r = 0; r < 4; ++r)
    for (int s = 0; s < 4; ++s)
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
          double v = c.dchristoffel[m][r](n, s) - c.dchristoffel[n][r](m, s);
          for (int l = 0; l < 4; ++l)
            v += c.christoffel[r](m, l) * c.christoffel[l](n, s) - c.christoffel[r](n, l) * c.christoffel[l](m, s);
          c.riemann[((r * 4 + s) * 4 + m) * 4 + n] = v;
        }
  // R_sn = R^r_srn
  for (int s = 0; s < 4; ++s)
    for (int n = 0; n < 4; ++n) {
      double v = 0.0;
      for (int r = 0; r < 4; ++r) v += c.riemann_at(r, s, r, n);
      c.ricci(s, n) = v;
    }
  c.scalar_curvature = (c.g_inv.cwiseProduct(c.ricci)).sum();
  return c;
}

const char* to_string(CausalClass c) {
  switch (c) {
    case CausalClass::TimelikeFuture: return "TimelikeFuture";
    case CausalClass::TimelikePast: return "TimelikePast";
    case CausalClass::NullFuture: return "NullFuture";
    case CausalClass::NullPast: return "NullPast";
    case CausalClass::Spacelike: return "Spacelike";
    case CausalClass::Zero: return "Zero";
  }
  return "Unknown";
}

Vec4 raise(const GeometryCache& cache, const Vec4& xi) { return cache.g_inv * xi; }

CausalClass classify_covector(const GeometryCache& cache, const Vec4& xi, double null_tol) {
  if (xi.isZero(0.0)) return CausalClass::Zero;
  Vec4 v = cache.g_inv * xi;
  double q = xi.dot(v);
  double scale = xi.norm() * v.norm();
  if (std::abs(q) <= null_tol * scale) return v[0] > 0 ? CausalClass::NullFuture : CausalClass::NullPast;
  if (q < 0) return CausalClass::Spacelike;
  return v[0] > 0 ? CausalClass::TimelikeFuture : CausalClass::TimelikePast;
}

Vec4 future_normalize(const GeometryCache& cache, const Vec4& xi) {
  Vec4 v = cache.g_inv * xi;
  if (v[0] == 0.0) throw Error(ErrorCode::InvalidArgument, "covector has vanishing raised time component");
  return xi / std::abs(v[0]);
}

void geodesic_rhs(const MetricSpec& spec, const double* state, double* dstate) {
  Vec4 x(state[0], state[1], state[2], state[3]);
  Vec4 xi(state[4], state[5], state[6], state[7]);
  Mat4 g;
  std::array<Mat4, 4> dg;
  metric_with_derivatives(spec, x, g, dg);
  Vec4 u;
  Mat4 off = g;
  off.diagonal().setZero();
  if (off.isZero(0.0)) {
    for (int m = 0; m < 4; ++m) u[m] = xi[m] / g(m, m);
  } else {
    u = g.partialPivLu().solve(xi);
  }
  for (int m = 0; m < 4; ++m) dstate[m] = 2.0 * u[m];
  for (int l = 0; l < 4; ++l) {
    double s = 0.0;
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) s += u[m] * dg[l](m, n) * u[n];
    dstate[4 + l] = s;
  }
}

}  // namespace microloc
