#include "microloc/spin.hpp"

#include <map>
#include <optional>

namespace microloc {

namespace {

const cplx I(0.0, 1.0);

FlatGammas make_dirac_basis() {
  FlatGammas f;
  Eigen::Matrix2cd s1, s2, s3, id = Eigen::Matrix2cd::Identity();
  s1 << 0, 1, 1, 0;
  s2 << 0, -I, I, 0;
  s3 << 1, 0, 0, -1;
  f.gamma[0].setZero();
  f.gamma[0].topLeftCorner<2, 2>() = id;
  f.gamma[0].bottomRightCorner<2, 2>() = -id;
  const Eigen::Matrix2cd* s[3] = {&s1, &s2, &s3};
  for (int k = 0; k < 3; ++k) {
    f.gamma[k + 1].setZero();
    f.gamma[k + 1].topRightCorner<2, 2>() = *s[k];
    f.gamma[k + 1].bottomLeftCorner<2, 2>() = -*s[k];
  }
  f.gamma5 = I * f.gamma[0] * f.gamma[1] * f.gamma[2] * f.gamma[3];
  return f;
}

}  // namespace

const FlatGammas& dirac_basis() {
  static const FlatGammas basis = make_dirac_basis();
  return basis;
}

GammaSet gamma_curved(const GeometryCache& cache) {
  const auto& flat = dirac_basis();
  GammaSet gs;
  gs.tetrad = cache.tetrad;
  for (int mu = 0; mu < 4; ++mu) {
    gs.upper[mu].setZero();
    for (int a = 0; a < 4; ++a) gs.upper[mu] += cache.tetrad(mu, a) * flat.gamma[a];
  }
  return gs;
}

Mat4c slash(const GammaSet& gammas, const Vec4& xi) {
  Mat4c s = Mat4c::Zero();
  for (int mu = 0; mu < 4; ++mu) s += xi[mu] * gammas.upper[mu];
  return s;
}

double anticommutator_residual(const GammaSet& gammas, const Mat4& g_inv) {
  double worst = 0.0;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      Mat4c ac = gammas.upper[m] * gammas.upper[n] + gammas.upper[n] * gammas.upper[m];
      ac.diagonal().array() -= 2.0 * g_inv(m, n);
      worst = std::max(worst, ac.cwiseAbs().maxCoeff());
    }
  return worst;
}

SpinConnection spin_connection(const GeometryCache& cache) {
  if (cache.level == CacheLevel::Metric)
    throw Error(ErrorCode::InvalidArgument, "spin connection needs a cache with connection data");
  const auto& flat = dirac_basis();
  const Mat4& e = cache.tetrad;
  const Mat4& th = cache.coframe;
  SpinConnection sc;
  for (int mu = 0; mu < 4; ++mu) {
    // omega^a_b = theta^a_nu (d_mu e^nu_b + Gamma^nu_{mu l} e^l_b)
    Mat4 de = cache.dtetrad[mu];
    for (int nu = 0; nu < 4; ++nu)
      for (int b = 0; b < 4; ++b) {
        double s = 0.0;
        for (int l = 0; l < 4; ++l) s += cache.christoffel[nu](mu, l) * e(l, b);
        de(nu, b) += s;
      }
    Mat4 omega = eta() * (th * de);  // omega_{ab}, first index lowered
    Mat4c s = Mat4c::Zero();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        if (a != b && omega(a, b) != 0.0) s += (0.25 * omega(a, b)) * (flat.gamma[a] * flat.gamma[b]);
    sc.sigma[mu] = s;
  }
  return sc;
}

SpinConnection spin_connection_at(const MetricSpec& spec, const Vec4& x) {
  return spin_connection(metric_at(spec, x, CacheLevel::Connection));
}

Mat4c contract(const SpinConnection& s, const Vec4& v) {
  Mat4c m = Mat4c::Zero();
  for (int mu = 0; mu < 4; ++mu) m += v[mu] * s.sigma[mu];
  return m;
}

double nabla_gamma_residual(const MetricSpec& spec, const Vec4& x, double h) {
  auto c = metric_at(spec, x, CacheLevel::Connection);
  auto gs = gamma_curved(c);
  auto sc = spin_connection(c);
  double worst = 0.0;
  for (int mu = 0; mu < 4; ++mu) {
    Vec4 e = Vec4::Zero();
    e[mu] = h;
    auto gp = gamma_curved(metric_at(spec, x + e, CacheLevel::Metric));
    auto gm = gamma_curved(metric_at(spec, x - e, CacheLevel::Metric));
    for (int nu = 0; nu < 4; ++nu) {
      Mat4c r = (gp.upper[nu] - gm.upper[nu]) / (2 * h);
      for (int l = 0; l < 4; ++l) r += c.christoffel[nu](mu, l) * gs.upper[l];
      r += sc.sigma[mu] * gs.upper[nu] - gs.upper[nu] * sc.sigma[mu];
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

std::array<Mat4c, 16> bispinor_basis(const GammaSet& gammas) {
  std::array<Mat4c, 16> b;
  const auto& g = gammas.upper;
  const Mat4c& g5 = dirac_basis().gamma5;
  b[0] = Mat4c::Identity();
  for (int m = 0; m < 4; ++m) b[1 + m] = g[m];
  int k = 5;
  for (int m = 0; m < 4; ++m)
    for (int n = m + 1; n < 4; ++n) b[k++] = 0.5 * I * (g[m] * g[n] - g[n] * g[m]);
  b[11] = g5;
  for (int m = 0; m < 4; ++m) b[12 + m] = g[m] * g5;
  return b;
}

BispinorCoefficients bispinor_decompose(const Mat4c& w, const GammaSet& gammas) {
  auto basis = bispinor_basis(gammas);
  Eigen::Matrix<cplx, 16, 16> gram;
  Eigen::Matrix<cplx, 16, 1> rhs;
  for (int i = 0; i < 16; ++i) {
    rhs[i] = (basis[i] * w).trace();
    for (int j = 0; j < 16; ++j) gram(i, j) = (basis[i] * basis[j]).trace();
  }
  Eigen::Matrix<cplx, 16, 1> c = gram.partialPivLu().solve(rhs);
  BispinorCoefficients out;
  out.scalar = c[0];
  for (int m = 0; m < 4; ++m) out.vector[m] = c[1 + m];
  for (int k = 0; k < 6; ++k) out.tensor[k] = c[5 + k];
  out.pseudoscalar = c[11];
  for (int m = 0; m < 4; ++m) out.axial[m] = c[12 + m];
  return out;
}

Mat4c bispinor_reconstruct(const BispinorCoefficients& c, const GammaSet& gammas) {
  auto b = bispinor_basis(gammas);
  Mat4c w = c.scalar * b[0] + c.pseudoscalar * b[11];
  for (int m = 0; m < 4; ++m) w += c.vector[m] * b[1 + m] + c.axial[m] * b[12 + m];
  for (int k = 0; k < 6; ++k) w += c.tensor[k] * b[5 + k];
  return w;
}

int numerical_rank(const MatXc& m, double rel_threshold) {
  Eigen::JacobiSVD<MatXc> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_threshold * s[0]) ++r;
  return r;
}

CliffordKernel clifford_kernel(const GammaSet& gammas, const Vec4& xi, double rel_threshold) {
  Mat4c p = slash(gammas, xi);
  Eigen::Matrix<cplx, 16, 5> A;
  Mat4c col = p;
  A.col(0) = Eigen::Map<Eigen::Matrix<cplx, 16, 1>>(col.data());
  for (int nu = 0; nu < 4; ++nu) {
    col = p * gammas.upper[nu];
    A.col(1 + nu) = Eigen::Map<Eigen::Matrix<cplx, 16, 1>>(col.data());
  }
  Eigen::JacobiSVD<Eigen::Matrix<cplx, 16, 5>> svd(A, Eigen::ComputeFullV);
  CliffordKernel k;
  k.singular_values = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < 5; ++i)
    if (k.singular_values[i] > rel_threshold * k.singular_values[0]) ++rank;
  k.dimension = 5 - rank;
  if (rank > 0 && rank < 5) {
    double discarded = k.singular_values[rank];
    k.gap = discarded > 0 ? k.singular_values[rank - 1] / discarded : std::numeric_limits<double>::infinity();
  }
  k.basis = svd.matrixV().col(4);
  return k;
}

LichnerowiczReport lichnerowicz_check(const MetricSpec& spec, const SpinorField& f, double mass) {
  for (int a = 0; a < 4; ++a)
    if (f.counts[a] < 5) throw Error(ErrorCode::GridTooCoarse, "nested stencil needs at least 5 points per axis");
  for (int a = 0; a < 4; ++a)
    if (!(f.spacing[a] > 0)) throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
  if (f.values.size() != static_cast<size_t>(f.counts[0]) * f.counts[1] * f.counts[2] * f.counts[3])
    throw Error(ErrorCode::InvalidArgument, "field size does not match grid counts");

  struct FirstLevel {
    Vec4c dirac;                   // D psi
    std::array<Vec4c, 4> nabla;    // nabla_nu psi
  };
  std::map<size_t, FirstLevel> cache;
  auto first = [&](const std::array<int, 4>& i) -> const FirstLevel& {
    size_t id = f.index(i[0], i[1], i[2], i[3]);
    auto it = cache.find(id);
    if (it != cache.end()) return it->second;
    Vec4 x = f.point(i[0], i[1], i[2], i[3]);
    auto c = metric_at(spec, x, CacheLevel::Connection);
    auto gs = gamma_curved(c);
    auto sc = spin_connection(c);
    FirstLevel fl;
    fl.dirac.setZero();
    const Vec4c& psi = f.values[id];
    for (int mu = 0; mu < 4; ++mu) {
      auto jp = i, jm = i;
      ++jp[mu];
      --jm[mu];
      Vec4c d = (f.values[f.index(jp[0], jp[1], jp[2], jp[3])] - f.values[f.index(jm[0], jm[1], jm[2], jm[3])]) /
                (2 * f.spacing[mu]);
      fl.nabla[mu] = d + sc.sigma[mu] * psi;
      fl.dirac += gs.upper[mu] * fl.nabla[mu];
    }
    return cache.emplace(id, fl).first->second;
  };

  LichnerowiczReport rep;
  rep.h = f.spacing.maxCoeff();
  std::array<int, 4> i{};
  for (i[0] = 2; i[0] < f.counts[0] - 2; ++i[0])
    for (i[1] = 2; i[1] < f.counts[1] - 2; ++i[1])
      for (i[2] = 2; i[2] < f.counts[2] - 2; ++i[2])
        for (i[3] = 2; i[3] < f.counts[3] - 2; ++i[3]) {
          Vec4 x = f.point(i[0], i[1], i[2], i[3]);
          auto c = metric_at(spec, x, CacheLevel::Curvature);
          auto gs = gamma_curved(c);
          auto sc = spin_connection(c);
          const FirstLevel& here = first(i);
          const Vec4c& psi = f.values[f.index(i[0], i[1], i[2], i[3])];
          Vec4c dd = Vec4c::Zero();  // D (D psi)
          std::array<std::array<Vec4c, 4>, 4> dn;  // d_mu nabla_nu psi
          for (int mu = 0; mu < 4; ++mu) {
            auto jp = i, jm = i;
            ++jp[mu];
            --jm[mu];
            const FirstLevel& p = first(jp);
            const FirstLevel& m = first(jm);
            Vec4c d = (p.dirac - m.dirac) / (2 * f.spacing[mu]);
            dd += gs.upper[mu] * (d + sc.sigma[mu] * here.dirac);
            for (int nu = 0; nu < 4; ++nu) dn[mu][nu] = (p.nabla[nu] - m.nabla[nu]) / (2 * f.spacing[mu]);
          }
          Vec4c box = Vec4c::Zero();
          for (int mu = 0; mu < 4; ++mu)
            for (int nu = 0; nu < 4; ++nu) {
              if (c.g_inv(mu, nu) == 0.0) continue;
              Vec4c t = dn[mu][nu] + sc.sigma[mu] * here.nabla[nu];
              for (int l = 0; l < 4; ++l) t -= c.christoffel[l](mu, nu) * here.nabla[l];
              box += c.g_inv(mu, nu) * t;
            }
          Vec4c lhs = dd + mass * mass * psi;
          Vec4c rhs = box - 0.25 * c.scalar_curvature * psi + mass * mass * psi;
          rep.max_residual = std::max(rep.max_residual, (lhs - rhs).cwiseAbs().maxCoeff());
          rep.max_lhs = std::max(rep.max_lhs, lhs.cwiseAbs().maxCoeff());
          rep.max_rhs = std::max(rep.max_rhs, rhs.cwiseAbs().maxCoeff());
          ++rep.points;
        }
  return rep;
}

}  // namespace microloc
