#include "microloc/symbols.hpp"

#include <random>

#include "microloc/spin.hpp"

namespace microloc {

namespace {

const cplx I(0.0, 1.0);

MultiIndex unit(int mu) {
  MultiIndex a{};
  a[mu] = 1;
  return a;
}

MultiIndex pair_index(int mu, int nu) {
  MultiIndex a{};
  ++a[mu];
  ++a[nu];
  return a;
}

cplx monomial(const MultiIndex& a, const Vec4& xi) {
  double v = 1.0;
  for (int k = 0; k < 4; ++k)
    for (int e = 0; e < a[k]; ++e) v *= xi[k];
  return v;
}

double step_for(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

cplx ipow_i(int n) {
  static const cplx powers[4] = {1.0, I, -1.0, -I};
  return powers[((n % 4) + 4) % 4];
}

// second-order part f g^{mn} d_m d_n with off-diagonal pairs merged
void add_metric_laplacian(std::vector<SymbolTerm>& out, const Mat4& g_inv, const MatXc& unit_matrix, double f) {
  for (int m = 0; m < 4; ++m)
    for (int n = m; n < 4; ++n) {
      double c = (m == n ? 1.0 : 2.0) * f * g_inv(m, n);
      if (c != 0.0) out.push_back({pair_index(m, n), c * unit_matrix});
    }
}

}  // namespace

MatXc PolynomialSymbol::value(const Vec4& x, const Vec4& xi) const {
  MatXc v = MatXc::Zero(size, size);
  for (const auto& t : terms(x)) v += monomial(t.alpha, xi) * t.coeff;
  return v;
}

MatXc PolynomialSymbol::d_xi(const Vec4& x, const Vec4& xi, int mu) const {
  MatXc v = MatXc::Zero(size, size);
  for (const auto& t : terms(x)) {
    if (t.alpha[mu] == 0) continue;
    MultiIndex b = t.alpha;
    --b[mu];
    v += static_cast<double>(t.alpha[mu]) * monomial(b, xi) * t.coeff;
  }
  return v;
}

MatXc PolynomialSymbol::d_x(const Vec4& x, const Vec4& xi, int mu) const {
  double h = step_for(x[mu]);
  Vec4 xp = x, xm = x;
  xp[mu] += h;
  xm[mu] -= h;
  return (value(xp, xi) - value(xm, xi)) / (xp[mu] - xm[mu]);
}

MatXc PolynomialSymbol::mixed_trace(const Vec4& x, const Vec4& xi) const {
  MatXc v = MatXc::Zero(size, size);
  for (int mu = 0; mu < dim; ++mu) {
    double h = step_for(x[mu]);
    Vec4 xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    v += (d_xi(xp, xi, mu) - d_xi(xm, xi, mu)) / (xp[mu] - xm[mu]);
  }
  return v;
}

namespace {

PolynomialSymbol part_of_order(const OperatorSpec& op, int k) {
  PolynomialSymbol s;
  s.size = op.size;
  s.dim = op.dim;
  auto coeffs = op.coefficients;
  s.terms = [coeffs, k](const Vec4& x) {
    std::vector<SymbolTerm> out;
    for (auto& t : coeffs(x, k)) {
      if (order_of(t.alpha) != k) continue;
      t.coeff *= ipow_i(k);
      out.push_back(std::move(t));
    }
    return out;
  };
  return s;
}

}  // namespace

PolynomialSymbol principal_part(const OperatorSpec& op) { return part_of_order(op, op.order); }

PolynomialSymbol subleading_part(const OperatorSpec& op) {
  if (op.order == 0) {
    PolynomialSymbol s;
    s.size = op.size;
    s.dim = op.dim;
    s.terms = [](const Vec4&) { return std::vector<SymbolTerm>{}; };
    return s;
  }
  return part_of_order(op, op.order - 1);
}

MatXc principal_symbol(const OperatorSpec& op, const Vec4& x, const Vec4& xi) {
  return principal_part(op).value(x, xi);
}

MatXc subprincipal_symbol(const OperatorSpec& op, const Vec4& x, const Vec4& xi) {
  return symbol_value(op, x, xi).subprincipal;
}

SymbolValue symbol_value(const OperatorSpec& op, const Vec4& x, const Vec4& xi) {
  SymbolValue v;
  auto p = principal_part(op);
  v.principal = p.value(x, xi);
  v.subleading = subleading_part(op).value(x, xi);
  // p^s = p_{m-1} - 1/(2i) sum d^2 p / dx^mu dxi_mu
  v.subprincipal = v.subleading - p.mixed_trace(x, xi) / (2.0 * I);
  return v;
}

CharSetResult char_set_membership(const OperatorSpec& op, const PhasePoint& pp, double rel) {
  if (pp.xi.isZero(0.0)) throw Error(ErrorCode::InvalidArgument, "xi must be nonzero");
  CharSetResult r;
  MatXc p = principal_symbol(op, pp.x, pp.xi);
  r.det = op.size == 1 ? p(0, 0) : p.determinant();
  double scale = 0.0;
  for (const auto& t : op.coefficients(pp.x, op.order))
    if (order_of(t.alpha) == op.order) scale += t.coeff.norm() * std::abs(monomial(t.alpha, pp.xi));
  r.threshold = rel * std::pow(scale, op.size);
  r.member = std::abs(r.det) < r.threshold;
  return r;
}

Vec4 sample_base_point(const OperatorSpec& op, std::mt19937_64& rng) {
  if (op.metric) return op.metric->sample_point(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec4 x = Vec4::Zero();
  for (int k = 0; k < op.dim; ++k) x[k] = u(rng);
  return x;
}

// ---------------------------------------------------------------------------
// operator families

OperatorSpec scalar_wave_operator(const MetricSpec& spec, std::function<double(const Vec4&)> f,
                                  std::function<Vec4(const Vec4&)> a, std::function<cplx(const Vec4&)> b) {
  OperatorSpec op;
  op.family = "scalar-wave";
  op.order = 2;
  op.size = 1;
  op.metric = spec;
  op.coefficients = [spec, f, a, b](const Vec4& x, int min_order) {
    std::vector<SymbolTerm> out;
    const MatXc one = MatXc::Identity(1, 1);
    double fx = f ? f(x) : 1.0;
    auto c = metric_at(spec, x, min_order <= 1 ? CacheLevel::Connection : CacheLevel::Metric);
    add_metric_laplacian(out, c.g_inv, one, fx);
    if (min_order <= 1) {
      // box = g^{mn} d_m d_n - g^{mn} Gamma^l_mn d_l
      Vec4 av = a ? a(x) : Vec4::Zero();
      for (int l = 0; l < 4; ++l) {
        double s = av[l] - fx * (c.g_inv.cwiseProduct(c.christoffel[l])).sum();
        if (s != 0.0) out.push_back({unit(l), s * one});
      }
    }
    if (min_order <= 0) {
      cplx bx = b ? b(x) : cplx(0.0);
      if (bx != 0.0) out.push_back({MultiIndex{}, bx * one});
    }
    return out;
  };
  return op;
}

OperatorSpec maxwell_lorentz_operator(const MetricSpec& spec) {
  OperatorSpec op;
  op.family = "maxwell-lorentz";
  op.order = 2;
  op.size = 4;
  op.metric = spec;
  op.coefficients = [spec](const Vec4& x, int min_order) {
    std::vector<SymbolTerm> out;
    const MatXc one = MatXc::Identity(4, 4);
    CacheLevel level = min_order <= 0 ? CacheLevel::Curvature
                                      : (min_order == 1 ? CacheLevel::Connection : CacheLevel::Metric);
    auto c = metric_at(spec, x, level);
    add_metric_laplacian(out, c.g_inv, one, 1.0);
    if (min_order <= 1) {
      // (d_l)^nu_mu : 2 g^{l s} Gamma^nu_{s mu} - delta^nu_mu g^{rs} Gamma^l_rs
      for (int l = 0; l < 4; ++l) {
        MatXc m = MatXc::Zero(4, 4);
        double trace = c.g_inv.cwiseProduct(c.christoffel[l]).sum();
        for (int nu = 0; nu < 4; ++nu)
          for (int mu = 0; mu < 4; ++mu) {
            double s = 0.0;
            for (int sg = 0; sg < 4; ++sg) s += 2.0 * c.g_inv(l, sg) * c.christoffel[nu](sg, mu);
            m(nu, mu) = s - (nu == mu ? trace : 0.0);
          }
        out.push_back({unit(l), m});
      }
    }
    if (min_order <= 0) {
      // g^{rs}(d_r Gamma^nu_{s mu} + Gamma^nu_{r l} Gamma^l_{s mu} - Gamma^l_rs Gamma^nu_{l mu}) - R^nu_mu
      Mat4 ricci_mixed = c.g_inv * c.ricci;
      MatXc m = MatXc::Zero(4, 4);
      for (int nu = 0; nu < 4; ++nu)
        for (int mu = 0; mu < 4; ++mu) {
          double s = 0.0;
          for (int r = 0; r < 4; ++r)
            for (int sg = 0; sg < 4; ++sg) {
              double gi = c.g_inv(r, sg);
              if (gi == 0.0) continue;
              double t = c.dchristoffel[r][nu](sg, mu);
              for (int l = 0; l < 4; ++l)
                t += c.christoffel[nu](r, l) * c.christoffel[l](sg, mu) - c.christoffel[l](r, sg) * c.christoffel[nu](l, mu);
              s += gi * t;
            }
          m(nu, mu) = s - ricci_mixed(nu, mu);
        }
      out.push_back({MultiIndex{}, m});
    }
    return out;
  };
  return op;
}

OperatorSpec dirac_operator(const MetricSpec& spec, double mass) {
  OperatorSpec op;
  op.family = "dirac";
  op.order = 1;
  op.size = 4;
  op.metric = spec;
  op.mass = mass;
  op.coefficients = [spec, mass](const Vec4& x, int min_order) {
    std::vector<SymbolTerm> out;
    auto c = metric_at(spec, x, min_order <= 0 ? CacheLevel::Connection : CacheLevel::Metric);
    auto gs = gamma_curved(c);
    for (int mu = 0; mu < 4; ++mu) out.push_back({unit(mu), MatXc(-I * gs.upper[mu])});
    if (min_order <= 0) {
      auto sc = spin_connection(c);
      Mat4c c0 = mass * Mat4c::Identity();
      for (int mu = 0; mu < 4; ++mu) c0 -= I * gs.upper[mu] * sc.sigma[mu];
      out.push_back({MultiIndex{}, MatXc(c0)});
    }
    return out;
  };
  return op;
}

OperatorSpec dirac_adjoint_operator(const MetricSpec& spec, double mass) {
  OperatorSpec op;
  op.family = "dirac-adjoint";
  op.order = 1;
  op.size = 4;
  op.metric = spec;
  op.mass = mass;
  op.coefficients = [spec, mass](const Vec4& x, int min_order) {
    std::vector<SymbolTerm> out;
    auto c = metric_at(spec, x, min_order <= 0 ? CacheLevel::Connection : CacheLevel::Metric);
    auto gs = gamma_curved(c);
    for (int mu = 0; mu < 4; ++mu) out.push_back({unit(mu), MatXc(I * gs.upper[mu].transpose())});
    if (min_order <= 0) {
      auto sc = spin_connection(c);
      Mat4c c0 = mass * Mat4c::Identity();
      for (int mu = 0; mu < 4; ++mu) c0 -= I * gs.upper[mu].transpose() * sc.sigma[mu].transpose();
      out.push_back({MultiIndex{}, MatXc(c0)});
    }
    return out;
  };
  return op;
}

OperatorSpec make_operator(const std::string& family, const MetricSpec& spec, double mass) {
  if (family == "scalar-wave") {
    if (mass == 0.0) return scalar_wave_operator(spec);
    return scalar_wave_operator(spec, {}, {}, [mass](const Vec4&) { return cplx(mass * mass); });
  }
  if (family == "maxwell-lorentz") return maxwell_lorentz_operator(spec);
  if (family == "dirac") return dirac_operator(spec, mass);
  if (family == "dirac-adjoint") return dirac_adjoint_operator(spec, mass);
  throw Error(ErrorCode::NotRecognized, "unknown operator family '" + family + "'");
}

// ---------------------------------------------------------------------------
// real principal type factorizations

namespace {

PolynomialSymbol scalar_times_metric_quadratic(const MetricSpec& spec, double sign, bool density,
                                               std::function<double(const Vec4&)> f = {}) {
  PolynomialSymbol q;
  q.size = 1;
  q.terms = [spec, sign, density, f](const Vec4& x) {
    auto c = metric_at(spec, x, CacheLevel::Metric);
    double w = sign * (density ? c.sqrt_minus_g() : 1.0) * (f ? f(x) : 1.0);
    std::vector<SymbolTerm> out;
    add_metric_laplacian(out, c.g_inv, MatXc::Identity(1, 1), w);
    return out;
  };
  return q;
}

Vec4 random_null_covector(const GeometryCache& c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d d(n(rng), n(rng), n(rng));
  d.normalize();
  double s = std::exp(n(rng));
  return c.coframe.transpose() * Vec4(s, -s * d[0], -s * d[1], -s * d[2]);
}

void verify(const OperatorSpec& op, RPTFactorization& f, int samples, unsigned seed, double tol) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  auto p = principal_part(op);
  f.max_residual = 0.0;
  for (int i = 0; i < samples; ++i) {
    Vec4 x = sample_base_point(op, rng);
    Vec4 xi = Vec4::Zero();
    for (int k = 0; k < op.dim; ++k) xi[k] = n(rng);
    MatXc pv = p.value(x, xi);
    MatXc pt = f.ptilde.value(x, xi);
    cplx qv = f.q.value(x, xi)(0, 0);
    double scale = std::max(pt.norm() * pv.norm(), std::abs(qv));
    if (scale == 0.0) continue;
    MatXc r = pt * pv - qv * MatXc::Identity(op.size, op.size);
    f.max_residual = std::max(f.max_residual, r.norm() / scale);
    if (std::abs(qv.imag()) > tol * std::max(1.0, std::abs(qv)))
      throw Error(ErrorCode::FactorizationFailed, "q is not real valued");
  }
  f.samples = samples;
  if (!(f.max_residual < tol))
    throw Error(ErrorCode::FactorizationFailed,
                "p~ p - q 1 residual " + std::to_string(f.max_residual) + " exceeds tolerance");
  // real principal type: on q = 0 the xi-gradient of q does not vanish
  if (op.metric) {
    for (int i = 0; i < 20; ++i) {
      Vec4 x = op.metric->sample_point(rng);
      auto c = metric_at(*op.metric, x, CacheLevel::Metric);
      Vec4 xi = random_null_covector(c, rng);
      double grad = 0.0, scale = 0.0;
      for (int mu = 0; mu < 4; ++mu) grad += std::norm(f.q.d_xi(x, xi, mu)(0, 0));
      for (const auto& t : f.q.terms(x)) scale += t.coeff.norm();
      if (!(std::sqrt(grad) > 1e-8 * scale * xi.norm()))
        throw Error(ErrorCode::FactorizationFailed, "H_q vanishes or is radial on q = 0");
    }
  }
}

}  // namespace

RPTFactorization rpt_factorize(const OperatorSpec& op, int samples, unsigned seed, double tol) {
  if (!op.metric) throw Error(ErrorCode::NotRecognized, "no metric attached; supply a candidate p~");
  const MetricSpec spec = *op.metric;
  RPTFactorization f;
  if (op.family == "scalar-wave") {
    // p = -f xi^2 already scalar; the scalar f is recovered from the principal coefficient
    auto p = principal_part(op);
    f.ptilde.size = 1;
    f.ptilde.terms = [](const Vec4&) { return std::vector<SymbolTerm>{{MultiIndex{}, MatXc::Identity(1, 1)}}; };
    f.q = p;
    f.description = "p~ = 1, q = -f g^{mn} xi_m xi_n on the whole chart";
  } else if (op.family == "maxwell-lorentz") {
    f.ptilde.size = 4;
    f.ptilde.terms = [spec](const Vec4& x) {
      double s = metric_at(spec, x, CacheLevel::Metric).sqrt_minus_g();
      return std::vector<SymbolTerm>{{MultiIndex{}, s * MatXc::Identity(4, 4)}};
    };
    f.q = scalar_times_metric_quadratic(spec, -1.0, true);
    f.description = "p~ = sqrt(-g) 1, q = -sqrt(-g) g^{mn} xi_m xi_n on the whole chart";
  } else if (op.family == "dirac" || op.family == "dirac-adjoint") {
    bool adjoint = op.family == "dirac-adjoint";
    f.ptilde.size = 4;
    f.ptilde.terms = [spec, adjoint](const Vec4& x) {
      auto c = metric_at(spec, x, CacheLevel::Metric);
      auto gs = gamma_curved(c);
      double s = c.sqrt_minus_g();
      std::vector<SymbolTerm> out;
      for (int mu = 0; mu < 4; ++mu)
        out.push_back({unit(mu), MatXc(adjoint ? Mat4c(-s * gs.upper[mu].transpose()) : Mat4c(s * gs.upper[mu]))});
      return out;
    };
    f.q = scalar_times_metric_quadratic(spec, 1.0, true);
    f.description = adjoint ? "p~ = -sqrt(-g) (xi.gamma)^T, q = sqrt(-g) g^{mn} xi_m xi_n on the whole chart"
                            : "p~ = sqrt(-g) xi.gamma, q = sqrt(-g) g^{mn} xi_m xi_n on the whole chart";
  } else {
    throw Error(ErrorCode::NotRecognized, "no built-in factorization for family '" + op.family + "'");
  }
  f.ptilde.dim = f.q.dim = op.dim;
  verify(op, f, samples, seed, tol);
  return f;
}

RPTFactorization rpt_factorize(const OperatorSpec& op, const PolynomialSymbol& ptilde, const PolynomialSymbol& q,
                               int samples, unsigned seed, double tol) {
  RPTFactorization f;
  f.ptilde = ptilde;
  f.q = q;
  f.description = "user candidate";
  verify(op, f, samples, seed, tol);
  return f;
}

}  // namespace microloc
