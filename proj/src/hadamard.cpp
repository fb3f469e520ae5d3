#include "microloc/hadamard.hpp"

#include <cmath>
#include <optional>

#include "microloc/error.hpp"

namespace microloc {

namespace {

const cplx I(0, 1);

// unit-vector chord between (a1, a2) and (b1, b2) as rays in R^8
double joint_chord(const Vec4& a1, const Vec4& a2, const Vec4& b1, const Vec4& b2, bool allow_sign) {
  Eigen::Matrix<double, 8, 1> a, b;
  a << a1, a2;
  b << b1, b2;
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 2.0;
  a /= na;
  b /= nb;
  double d = (a - b).norm();
  return allow_sign ? std::min(d, (a + b).norm()) : d;
}

bool same_point(const Vec4& a, const Vec4& b) { return (a - b).norm() <= 1e-12 * (1.0 + a.norm()); }

bool is_future(CausalClass c) { return c == CausalClass::NullFuture || c == CausalClass::TimelikeFuture; }

// rays are stored with raised time component +-1 when causal, unit length otherwise
double ray_scale(const GeometryCache& c, const Vec4& xi) {
  auto cls = classify_covector(c, xi);
  if (cls == CausalClass::Spacelike || cls == CausalClass::Zero) return xi.norm() > 0 ? 1.0 / xi.norm() : 1.0;
  double v0 = (c.g_inv * xi)[0];
  return 1.0 / std::abs(v0);
}

WFElement diagonal_element(const GeometryCache& c, const Vec4& x, const Vec4& xi_in) {
  WFElement e;
  e.x = e.y = x;
  e.xi = xi_in * ray_scale(c, xi_in);
  e.eta_raw = e.xi;
  e.eta = -e.xi;
  e.frequency_flag = is_future(classify_covector(c, e.xi));
  e.diagonal = true;
  return e;
}

Vec4 fibonacci(int i, int n) {
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  double z = 1.0 - 2.0 * (i + 0.5) / n;
  double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  double phi = golden * i;
  return Vec4(0.0, rho * std::cos(phi), rho * std::sin(phi), z);
}

struct Connected {
  std::optional<NullConnection> nc;
  bool failed = false;
  std::string note;
};

Connected connect(const MetricSpec& spec, const Vec4& x, const Vec4& y, const PredictOptions& o) {
  Connected out;
  try {
    out.nc = geodesic_connect(spec, x, y, o.bvp);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SolverDiverged && e.code() != ErrorCode::NotInNormalNeighbourhood) throw;
    out.failed = true;
    out.note = e.what();
  }
  return out;
}

Mat4c normalize_fibre(Mat4c w) {
  double n = w.norm();
  if (n == 0.0) throw Error(ErrorCode::InvalidArgument, "zero fibre");
  w /= n;
  Eigen::Index r = 0, c = 0;
  w.cwiseAbs().maxCoeff(&r, &c);
  cplx ph = w(r, c) / std::abs(w(r, c));
  return w / ph;
}

// Gauss-Legendre nodes on [-1, 1]
struct GaussLegendre {
  static constexpr int n = 10;
  std::array<double, n> x{}, w{};
  GaussLegendre() {
    for (int i = 0; i < n; ++i) {
      double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (t * p1 - p0) / (t * t - 1.0);
        double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-16) break;
      }
      x[i] = t;
      w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

const GaussLegendre& gauss_legendre() {
  static const GaussLegendre g;
  return g;
}

// (1 / 4 pi^2) int_0^inf f(k) dk for the radial mode integrals, truncated where
// exp(-k eps) is below 1e-18; panels resolve the oscillation and the damping.
template <class F>
cplx radial_integral(double mass, double r, double z0, double eps, F&& f) {
  const auto& gl = gauss_legendre();
  double kmax = 41.5 / eps;
  double h = std::min(kPi / (r + std::abs(z0) + eps), 1.0 / eps);
  if (mass > 0) h = std::min(h, std::max(mass, eps));
  long panels = static_cast<long>(std::ceil(kmax / h));
  if (panels > 20'000'000) throw Error(ErrorCode::InvalidArgument, "radial integral needs too many panels");
  h = kmax / static_cast<double>(panels);
  cplx sum = 0.0;
  for (long p = 0; p < panels; ++p) {
    double a = p * h;
    cplx part = 0.0;
    for (int i = 0; i < GaussLegendre::n; ++i) part += gl.w[i] * f(a + 0.5 * h * (gl.x[i] + 1.0));
    sum += 0.5 * h * part;
  }
  return sum / (4.0 * kPi * kPi);
}

// sin(kr)/r and its r-derivative, with the r -> 0 limits
double sinc_r(double k, double r) { return r * k < 1e-4 ? k * (1.0 - (k * r) * (k * r) / 6.0) : std::sin(k * r) / r; }
double dsinc_r(double k, double r) {
  double kr = k * r;
  if (kr < 1e-3) return -k * k * kr / 3.0 * (1.0 - kr * kr / 10.0);
  return (kr * std::cos(kr) - std::sin(kr)) / (r * r);
}

const std::vector<std::string>& names() {
  static const std::vector<std::string> n = {"delta", "one_over_x_plus_ieps", "v_laplace_v", "v_zero",
                                             "grad_delta_2d", "smooth", "minkowski_lambda"};
  return n;
}

}  // namespace

const char* to_string(Relation r) {
  switch (r) {
    case Relation::Related: return "related";
    case Relation::NotRelated: return "not-related";
    case Relation::NotEstablished: return "not-established";
  }
  return "?";
}

std::vector<Vec4> null_direction_family(const MetricSpec& spec, const Vec4& x, int count) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "direction count must be positive");
  auto c = metric_at(spec, x, CacheLevel::Metric);
  std::vector<Vec4> out;
  for (int i = 0; i < count; ++i) {
    Vec4 n = fibonacci(i, count);
    out.push_back(future_normalize(c, null_covector(spec, x, n.tail<3>())));
  }
  return out;
}

std::vector<Vec4> full_direction_family(const MetricSpec& spec, const Vec4& x, int count) {
  if (count < 2 || count % 2) throw Error(ErrorCode::InvalidArgument, "direction count must be even and positive");
  auto c = metric_at(spec, x, CacheLevel::Metric);
  const int half = count / 2;
  std::vector<Vec4> out;
  for (int i = 0; i < half; ++i) {
    // frame components (cos b, sin b n): timelike, spacelike and in between
    double b = kPi * (2 * (i % 4) + 1) / 8.0;
    Vec4 n = fibonacci(i, half);
    Vec4 k(std::cos(b), std::sin(b) * n[1], std::sin(b) * n[2], std::sin(b) * n[3]);
    Vec4 xi = c.coframe.transpose() * k;
    out.push_back(xi);
    out.push_back(-xi);
  }
  return out;
}

Relation equivalence_related(const MetricSpec& spec, const PhasePoint& a, const PhasePoint& b,
                             const PredictOptions& o) {
  if (a.xi.norm() == 0.0 || b.xi.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "covectors must be nonzero");
  if (same_point(a.x, b.x)) {
    auto c = metric_at(spec, a.x, CacheLevel::Metric);
    auto cls = classify_covector(c, a.xi);
    if (cls != CausalClass::NullFuture && cls != CausalClass::NullPast) return Relation::NotRelated;
    double d = (a.xi.normalized() - b.xi.normalized()).norm();
    return d < o.angular_tolerance ? Relation::Related : Relation::NotRelated;
  }
  auto con = connect(spec, a.x, b.x, o);
  if (con.failed) return Relation::NotEstablished;
  if (!con.nc) return Relation::NotRelated;
  double d = joint_chord(a.xi, b.xi, con.nc->xi, con.nc->eta, true);
  return d < o.angular_tolerance ? Relation::Related : Relation::NotRelated;
}

WFPrediction predict_wf_hadamard_scalar(const MetricSpec& spec, const Vec4& x, const Vec4& y,
                                        const PredictOptions& o) {
  spec.check_domain(x);
  spec.check_domain(y);
  WFPrediction out;
  if (same_point(x, y)) {
    auto c = metric_at(spec, x, CacheLevel::Metric);
    for (const auto& xi : null_direction_family(spec, x, o.directions)) out.elements.push_back(diagonal_element(c, x, xi));
    out.note = "diagonal: future null cone on a direction grid";
    return out;
  }
  auto con = connect(spec, x, y, o);
  if (con.failed) {
    out.complete = false;
    out.note = con.note;
    return out;
  }
  if (!con.nc) return out;
  WFElement e;
  e.x = x;
  e.y = y;
  e.xi = con.nc->xi;
  e.eta_raw = con.nc->eta;
  e.eta = -e.eta_raw;
  e.frequency_flag = true;
  e.diagnostics = con.nc->y_in_future ? "y in the causal future of x" : "y in the causal past of x";
  out.elements.push_back(e);
  return out;
}

bool wf_hadamard_contains(const MetricSpec& spec, const WFElement& cand, const PredictOptions& o) {
  if (same_point(cand.x, cand.y)) {
    auto c = metric_at(spec, cand.x, CacheLevel::Metric);
    if (classify_covector(c, cand.xi) != CausalClass::NullFuture) return false;
    return joint_chord(cand.xi, cand.eta, cand.xi, -cand.xi, false) < o.angular_tolerance;
  }
  auto pred = predict_wf_hadamard_scalar(spec, cand.x, cand.y, o);
  for (const auto& e : pred.elements)
    if (joint_chord(cand.xi, cand.eta, e.xi, e.eta, false) < o.angular_tolerance) return true;
  return false;
}

PolPrediction predict_pol_dirac(const MetricSpec& spec, const Vec4& x, const Vec4& y, const PredictOptions& o) {
  PolPrediction out;
  auto wf = predict_wf_hadamard_scalar(spec, x, y, o);
  out.complete = wf.complete;
  out.note = wf.note;
  if (wf.elements.empty()) return out;
  auto cx = metric_at(spec, x, CacheLevel::Metric);
  auto gs = gamma_curved(cx);
  if (same_point(x, y)) {
    for (const auto& e : wf.elements) out.elements.push_back({e, normalize_fibre(slash(gs, e.xi))});
    return out;
  }
  for (const auto& e : wf.elements) {
    // same geodesic as the scalar prediction, followed from x towards y
    bool future = e.diagnostics == "y in the causal future of x";
    Vec4 flow_xi = project_to_null(spec, x, future ? e.xi : Vec4(-e.xi));
    auto con = connect(spec, x, y, o);
    if (!con.nc) throw Error(ErrorCode::SolverDiverged, "geodesic connection lost between predictions");
    double tau_end = con.nc->affine_length;
    auto strip = integrate_bicharacteristic(spec, {x, flow_xi}, 0.0, tau_end, o.transport_steps);
    auto ps = transport_spinor(strip, slash(gs, e.xi), SpinorSide::BispinorRightOnly);
    PolElement pe{e, normalize_fibre(ps.bispinor(ps.fibre.size() - 1))};
    double miss = (strip.points.back().x - y).norm();
    if (miss > 1e-6 * (1.0 + y.norm())) pe.wf.diagnostics += "; strip endpoint misses y by " + std::to_string(miss);
    out.elements.push_back(pe);
  }
  return out;
}

WFPrediction predict_wf_feynman(const MetricSpec& spec, const Vec4& x, const Vec4& y, const PredictOptions& o) {
  spec.check_domain(x);
  spec.check_domain(y);
  WFPrediction out;
  out.note = "polarization fibres are not provided for the Feynman propagator";
  if (same_point(x, y)) {
    auto c = metric_at(spec, x, CacheLevel::Metric);
    for (const auto& xi : full_direction_family(spec, x, o.directions)) out.elements.push_back(diagonal_element(c, x, xi));
    out.note = "diagonal: all nonzero directions on a direction grid";
    return out;
  }
  auto con = connect(spec, x, y, o);
  if (con.failed) {
    out.complete = false;
    out.note = con.note;
    return out;
  }
  if (!con.nc) return out;
  // x in J+(y) gives future xi, x in J-(y) past xi
  double sgn = con.nc->y_in_future ? -1.0 : 1.0;
  WFElement e;
  e.x = x;
  e.y = y;
  e.xi = sgn * con.nc->xi;
  e.eta_raw = sgn * con.nc->eta;
  e.eta = -e.eta_raw;
  e.frequency_flag = sgn > 0;
  e.diagnostics = con.nc->y_in_future ? "x in the causal past of y" : "x in the causal future of y";
  out.elements.push_back(e);
  return out;
}

Admissibility product_admissible(const std::vector<WFElement>& a, const std::vector<WFElement>& b,
                                 double tol) {
  Admissibility out;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) {
      if (!same_point(a[i].x, b[j].x) || !same_point(a[i].y, b[j].y)) continue;
      if (joint_chord(a[i].xi, a[i].eta, -b[j].xi, -b[j].eta, false) < std::max(tol, 1e-12)) {
        out.admissible = false;
        out.offending.emplace_back(i, j);
      }
    }
  return out;
}

cplx eval_minkowski_scalar(double mass, const Vec4& x, const Vec4& y, double eps) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (mass < 0) throw Error(ErrorCode::InvalidArgument, "mass must be nonnegative");
  Vec4 z = x - y;
  cplx tau(z[0], eps);
  double r = z.tail<3>().norm();
  if (mass == 0.0) return 1.0 / (4.0 * kPi * kPi * (r * r - tau * tau));
  return radial_integral(mass, r, z[0], eps, [&](double k) {
    double w = std::sqrt(k * k + mass * mass);
    return (k / w) * sinc_r(k, r) * std::exp(I * w * tau);
  });
}

std::array<cplx, 4> eval_minkowski_scalar_gradient(double mass, const Vec4& x, const Vec4& y, double eps) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  Vec4 z = x - y;
  cplx tau(z[0], eps);
  double r = z.tail<3>().norm();
  std::array<cplx, 4> g{};
  if (mass == 0.0) {
    cplx ms = r * r - tau * tau;  // -sigma_eps
    cplx f = 1.0 / (4.0 * kPi * kPi * ms * ms);
    g[0] = 2.0 * tau * f;
    for (int i = 1; i < 4; ++i) g[i] = -2.0 * z[i] * f;
    return g;
  }
  g[0] = radial_integral(mass, r, z[0], eps, [&](double k) {
    double w = std::sqrt(k * k + mass * mass);
    return I * k * sinc_r(k, r) * std::exp(I * w * tau);
  });
  cplx dr = radial_integral(mass, r, z[0], eps, [&](double k) {
    double w = std::sqrt(k * k + mass * mass);
    return (k / w) * dsinc_r(k, r) * std::exp(I * w * tau);
  });
  for (int i = 1; i < 4; ++i) g[i] = r > 0 ? dr * z[i] / r : cplx(0.0);
  return g;
}

Mat4c eval_minkowski_dirac(double mass, const Vec4& x, const Vec4& y, double eps) {
  const auto& f = dirac_basis();
  auto grad = eval_minkowski_scalar_gradient(mass, x, y, eps);
  Mat4c w = Mat4c::Zero();
  for (int mu = 0; mu < 4; ++mu) w += I * grad[mu] * f.gamma[mu];
  if (mass != 0.0) w += mass * eval_minkowski_scalar(mass, x, y, eps) * Mat4c::Identity();
  return w;
}

FourierSupport fourier_vacuum_scalar(double mass, const Vec4& xi, const Vec4& eta, double rel_tol) {
  FourierSupport s;
  double scale = std::max({1.0, xi.norm(), eta.norm()});
  s.sum_zero = (xi + eta).norm() <= rel_tol * scale;
  s.positive_frequency = xi[0] > 0;
  double sq = xi.dot(microloc::eta() * xi);
  s.on_shell = std::abs(sq - mass * mass) <= rel_tol * scale * scale;
  s.on_support = s.sum_zero && s.positive_frequency && s.on_shell;
  if (s.on_support) s.weight = 1.0 / (2.0 * kPi * 2.0 * xi[0]);
  return s;
}

std::vector<std::string> sample_names() { return names(); }

Sample sample_examples(const std::string& name, const GridSpec& grid, double eps, const SampleOptions& opt) {
  bool known = false;
  for (const auto& n : names()) known = known || n == name;
  if (!known) throw Error(ErrorCode::NotRecognized, "unknown sample '" + name + "'");
  if (grid.dim != 1 && grid.dim != 2) throw Error(ErrorCode::InvalidArgument, "grids are 1- or 2-dimensional");
  for (int d = 0; d < grid.dim; ++d)
    if (!(grid.spacing[d] > 0) || grid.count[d] < 1) throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if ((name == "grad_delta_2d" || name == "minkowski_lambda") && grid.dim != 2)
    throw Error(ErrorCode::InvalidArgument, name + " needs a 2-dimensional grid");

  Sample s;
  s.name = name;
  s.grid = grid;
  s.eps = eps;
  s.components = (name == "v_laplace_v" || name == "v_zero" || name == "grad_delta_2d") ? 2 : 1;

  double h = grid.spacing[0];
  if (grid.dim == 2) h = std::max(h, grid.spacing[1]);
  const bool singular = name != "smooth";
  if (opt.cell_average) s.subsamples = std::max(1, static_cast<int>(std::ceil(h / (eps / 8.0) - 1e-9)));
  if (singular && h / s.subsamples > eps / 8.0 * (1 + 1e-12))
    throw Error(ErrorCode::GridTooCoarse, "need at least 8 samples per eps: spacing " + std::to_string(h) +
                                              " with eps " + std::to_string(eps));

  const double e2 = eps * eps;
  const int dim = grid.dim;
  auto gauss = [&](double rr) {
    double norm = dim == 1 ? 1.0 / std::sqrt(2 * kPi * e2) : 1.0 / (2 * kPi * e2);
    return norm * std::exp(-rr / (2 * e2));
  };
  auto eval = [&](double a, double b, cplx* out) {
    double rr = a * a + (dim == 2 ? b * b : 0.0);
    if (name == "delta") {
      out[0] = gauss(rr);
    } else if (name == "one_over_x_plus_ieps") {
      out[0] = 1.0 / cplx(a, eps);
    } else if (name == "v_laplace_v") {
      double v = gauss(rr);
      out[0] = v;
      out[1] = v * (rr / (e2 * e2) - dim / e2);
    } else if (name == "v_zero") {
      out[0] = gauss(rr);
      out[1] = 0.0;
    } else if (name == "grad_delta_2d") {
      double v = gauss(rr);
      out[0] = -a / e2 * v;
      out[1] = -b / e2 * v;
    } else if (name == "smooth") {
      out[0] = std::exp(-rr / 2.0);
    } else {
      // massless closed form, same as eval_minkowski_scalar on the slice
      double dr = b * b - a * a + eps * eps, di = -2.0 * a * eps;
      double n = 4.0 * kPi * kPi * (dr * dr + di * di);
      out[0] = cplx(dr / n, -di / n);
    }
  };

  const int n0 = grid.count[0], n1 = dim == 2 ? grid.count[1] : 1;
  const int ns = s.subsamples;
  const int ns1 = dim == 2 ? ns : 1;
  s.values.assign(static_cast<size_t>(n0) * n1 * s.components, 0.0);
  std::vector<cplx> tmp(s.components);
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i0 = 0; i0 < n0; ++i0) {
      auto p = grid.point(i0, i1);
      for (int j1 = 0; j1 < ns1; ++j1)
        for (int j0 = 0; j0 < ns; ++j0) {
          double a = p[0] + ((j0 + 0.5) / ns - 0.5) * grid.spacing[0];
          double b = dim == 2 ? p[1] + ((j1 + 0.5) / ns1 - 0.5) * grid.spacing[1] : 0.0;
          eval(a, b, tmp.data());
          for (int c = 0; c < s.components; ++c) s.at(i0, i1, c) += tmp[c];
        }
      for (int c = 0; c < s.components; ++c) s.at(i0, i1, c) /= static_cast<double>(ns * ns1);
    }
  return s;
}

}  // namespace microloc
