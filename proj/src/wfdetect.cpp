#include "microloc/wfdetect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "microloc/error.hpp"

namespace microloc {

namespace {

const double kGaussCut = std::sqrt(2.0 * std::log(1e16));  // window below 1e-16 is dropped

struct Fit {
  double slope = 0.0;
  double residual = 0.0;
};

Fit fit_loglog(const std::vector<double>& k, const std::vector<double>& m, size_t lo, size_t hi, double clamp) {
  const size_t n = hi - lo;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(n), ly(n);
  for (size_t i = 0; i < n; ++i) {
    lx[i] = std::log(k[lo + i]);
    ly[i] = std::log(std::max(m[lo + i], clamp));
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  Fit f;
  double den = n * sxx - sx * sx;
  f.slope = den > 0 ? (n * sxy - sx * sy) / den : 0.0;
  double b = (sy - f.slope * sx) / n;
  double ss = 0;
  for (size_t i = 0; i < n; ++i) ss += std::pow(ly[i] - (b + f.slope * lx[i]), 2);
  f.residual = std::sqrt(ss / n);
  return f;
}

// Fourier multiplier of a midpoint average over n points across a cell of width h.
double cell_transfer(double kappa_h, int n) {
  if (n <= 1) return 1.0;
  double a = 0.5 * kappa_h;
  double d = n * std::sin(a / n);
  if (std::abs(d) < 1e-300) return 1.0;
  return std::sin(a) / d;
}

struct Probe {
  int sector = 0;
  double angle = 0.0;
  std::array<double, 2> dir{1.0, 0.0};
  bool centre = false;
};

std::vector<Probe> probes(int dim, const DetectorConfig& cfg) {
  std::vector<Probe> out;
  if (dim == 1) {
    out.push_back({0, 0.0, {1.0, 0.0}, true});
    out.push_back({1, kPi, {-1.0, 0.0}, true});
    return out;
  }
  const int R = cfg.sectors, S = cfg.subdirections;
  for (int j = 0; j < R; ++j) {
    double c = 2.0 * kPi * j / R;
    for (int s = 0; s < S; ++s) {
      double off = S == 1 ? 0.0 : (2.0 * s / (S - 1) - 1.0) * kPi / R;
      double a = c + off;
      out.push_back({j, c, {std::cos(a), std::sin(a)}, S == 1 || 2 * s == S - 1});
    }
    if (S % 2 == 0) out.push_back({j, c, {std::cos(c), std::sin(c)}, true});
  }
  return out;
}

struct SectorResult {
  WFEntry entry;
  std::vector<VecXc> centre;  // F at the sector centre, per ladder sample
};

double window_value(WindowKind kind, double w, double r) {
  if (kind == WindowKind::Gaussian) return std::exp(-0.5 * r * r / (w * w));
  double t = r / w;
  if (t >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

std::vector<SectorResult> analyse(const Sample& s, const DetectorConfig& cfg, double k_max, double w,
                                  const std::array<double, 2>& base) {
  const GridSpec& g = s.grid;
  const int dim = g.dim;
  const int nc = s.components;
  const double radius = cfg.window == WindowKind::Gaussian ? kGaussCut * w : w;

  std::array<int, 2> lo{0, 0}, hi{0, 0};
  for (int a = 0; a < dim; ++a) {
    const double h = g.spacing[a];
    if (k_max > kPi / (2.0 * h) * (1 + 1e-12))
      throw Error(ErrorCode::GridTooCoarse, "k_max " + std::to_string(k_max) + " exceeds half the Nyquist frequency " +
                                                std::to_string(kPi / (2.0 * h)));
    double first = g.origin[a], last = g.origin[a] + (g.count[a] - 1) * h;
    if (base[a] - radius < first - 1e-12 * h || base[a] + radius > last + 1e-12 * h)
      throw Error(ErrorCode::WindowTooWide, "window of radius " + std::to_string(radius) + " around " +
                                                std::to_string(base[a]) + " leaves the grid");
    lo[a] = static_cast<int>(std::ceil((base[a] - radius - g.origin[a]) / h - 1e-9));
    hi[a] = static_cast<int>(std::floor((base[a] + radius - g.origin[a]) / h + 1e-9));
    lo[a] = std::max(lo[a], 0);
    hi[a] = std::min(hi[a], g.count[a] - 1);
  }
  if (dim == 1) lo[1] = hi[1] = 0;

  const int m0 = hi[0] - lo[0] + 1, m1 = hi[1] - lo[1] + 1;
  std::vector<double> r0(m0), r1(m1, 0.0);
  for (int i = 0; i < m0; ++i) r0[i] = g.origin[0] + (lo[0] + i) * g.spacing[0] - base[0];
  if (dim == 2)
    for (int i = 0; i < m1; ++i) r1[i] = g.origin[1] + (lo[1] + i) * g.spacing[1] - base[1];

  // windowed sample, A[c](i1, i0)
  const double cell = dim == 1 ? g.spacing[0] : g.spacing[0] * g.spacing[1];
  std::vector<MatXc> A(nc, MatXc::Zero(m1, m0));
  double l1 = 0.0;
  for (int i0 = 0; i0 < m0; ++i0)
    for (int i1 = 0; i1 < m1; ++i1) {
      double r = std::hypot(r0[i0], r1[i1]);
      if (r > radius) continue;
      double phi = window_value(cfg.window, w, r) * cell;
      double nrm = 0.0;
      for (int c = 0; c < nc; ++c) {
        cplx v = phi * s.at(lo[0] + i0, lo[1] + i1, c);
        A[c](i1, i0) = v;
        nrm += std::norm(v);
      }
      l1 += std::sqrt(nrm);
    }

  const int nk = cfg.radial_samples;
  const double k_min = k_max / cfg.k_ratio;
  std::vector<double> ks(nk);
  for (int i = 0; i < nk; ++i) ks[i] = k_min * std::pow(cfg.k_ratio, static_cast<double>(i) / (nk - 1));

  auto pr = probes(dim, cfg);
  const int nsec = dim == 1 ? 2 : cfg.sectors;
  std::vector<SectorResult> out(nsec);
  for (int j = 0; j < nsec; ++j) {
    out[j].entry.base = base;
    out[j].entry.sector = j;
    out[j].entry.k = ks;
    out[j].entry.magnitude.assign(nk, 0.0);
    out[j].centre.assign(nk, VecXc::Zero(nc));
  }
  for (const auto& p : pr)
    if (p.centre) {
      out[p.sector].entry.angle = p.angle;
      out[p.sector].entry.direction = p.dir;
    }

  // every (k, probe) pair is one column: F = sum_i1 e1(i1) sum_i0 A(i1, i0) e0(i0)
  const int np = static_cast<int>(pr.size());
  const int nq = nk * np;
  MatXc E0(m0, nq), E1(m1, nq);
  std::vector<double> transfer(nq);
  for (int ik = 0; ik < nk; ++ik)
    for (int ip = 0; ip < np; ++ip) {
      const int q = ik * np + ip;
      const double k0 = ks[ik] * pr[ip].dir[0], k1 = dim == 2 ? ks[ik] * pr[ip].dir[1] : 0.0;
      for (int i = 0; i < m0; ++i) E0(i, q) = std::polar(1.0, -k0 * r0[i]);
      for (int i = 0; i < m1; ++i) E1(i, q) = std::polar(1.0, -k1 * r1[i]);
      transfer[q] = cell_transfer(k0 * g.spacing[0], s.subsamples);
      if (dim == 2) transfer[q] *= cell_transfer(k1 * g.spacing[1], s.subsamples);
    }
  MatXc F(nc, nq);
  for (int c = 0; c < nc; ++c) {
    MatXc B = A[c] * E0;
    F.row(c) = E1.cwiseProduct(B).colwise().sum();
  }
  for (int ik = 0; ik < nk; ++ik)
    for (int ip = 0; ip < np; ++ip) {
      const int q = ik * np + ip;
      VecXc f = F.col(q) / transfer[q];
      auto& e = out[pr[ip].sector].entry;
      e.magnitude[ik] = std::max(e.magnitude[ik], f.norm());
      if (pr[ip].centre) out[pr[ip].sector].centre[ik] = f;
    }

  const double floor_abs = cfg.floor * l1;
  const double clamp = std::max(floor_abs, 1e-300);
  for (auto& res : out) {
    auto& e = res.entry;
    e.floor = floor_abs;
    e.peak = *std::max_element(e.magnitude.begin(), e.magnitude.end());
    const size_t half = static_cast<size_t>(nk) / 2;
    double upper_peak = *std::max_element(e.magnitude.begin() + half, e.magnitude.end());
    Fit full = fit_loglog(ks, e.magnitude, 0, nk, clamp);
    Fit upper = fit_loglog(ks, e.magnitude, half, nk, clamp);
    e.slope = full.slope;
    e.residual = full.residual;
    e.upper_slope = upper.slope;
    if (upper_peak <= floor_abs || upper.slope <= cfg.slope_threshold)
      e.verdict = Verdict::Regular;
    else if (full.slope > cfg.slope_threshold && full.residual < cfg.residual_threshold)
      e.verdict = Verdict::Singular;
    else
      e.verdict = Verdict::Inconclusive;
  }
  return out;
}

std::vector<std::vector<SectorResult>> run_all(const Sample& s, const DetectorConfig& cfg,
                                               const std::vector<std::array<double, 2>>& bases, double& k_max,
                                               double& w) {
  cfg.validate();
  if (s.grid.dim != 1 && s.grid.dim != 2) throw Error(ErrorCode::InvalidArgument, "samples are 1- or 2-dimensional");
  if (s.values.size() != s.grid.size() * s.components)
    throw Error(ErrorCode::InvalidArgument, "sample size does not match its grid");
  k_max = cfg.resolved_k_max(s.eps);
  w = cfg.resolved_width(k_max);
  std::vector<std::vector<SectorResult>> results(bases.size());
  const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(bases.size())));
  if (threads == 1) {
    for (size_t i = 0; i < bases.size(); ++i) results[i] = analyse(s, cfg, k_max, w, bases[i]);
    return results;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(bases.size());
  auto worker = [&] {
    for (size_t i = next++; i < bases.size(); i = next++) {
      try {
        results[i] = analyse(s, cfg, k_max, w, bases[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace

const char* to_string(WindowKind w) { return w == WindowKind::Gaussian ? "gaussian" : "bump"; }

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Regular: return "Regular";
    case Verdict::Singular: return "Singular";
    default: return "Inconclusive";
  }
}

void DetectorConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (!(k_ratio >= 16.0)) bad("k_max / k_min must be at least 16");
  if (radial_samples < 8) bad("need at least 8 radial samples");
  if (sectors < 2) bad("need at least 2 sectors");
  if (subdirections < 1) bad("need at least one probe direction per sector");
  if (!(width_factor > 0)) bad("width factor must be positive");
  if (!(residual_threshold > 0)) bad("residual threshold must be positive");
  if (!(floor >= 0)) bad("floor must be non-negative");
}

double DetectorConfig::resolved_k_max(double eps) const {
  if (k_max > 0) return k_max;
  if (eps > 0) return 0.2 / eps;
  throw Error(ErrorCode::InvalidArgument, "k_max unset and the sample carries no eps");
}

double DetectorConfig::resolved_width(double km) const { return width > 0 ? width : width_factor / km; }

size_t WFReport::count(Verdict v) const {
  return static_cast<size_t>(std::count_if(entries.begin(), entries.end(), [&](const WFEntry& e) { return e.verdict == v; }));
}

WFReport wf_detect(const Sample& sample, const DetectorConfig& cfg, const std::vector<std::array<double, 2>>& bases) {
  WFReport rep;
  rep.config = cfg;
  auto all = run_all(sample, cfg, bases, rep.k_max, rep.width);
  for (auto& per : all)
    for (auto& r : per) rep.entries.push_back(std::move(r.entry));
  return rep;
}

std::vector<PolEntry> pol_detect(const Sample& sample, const DetectorConfig& cfg,
                                 const std::vector<std::array<double, 2>>& bases) {
  double k_max = 0, w = 0;
  auto all = run_all(sample, cfg, bases, k_max, w);
  std::vector<PolEntry> out;
  const int nc = sample.components;
  for (auto& per : all)
    for (auto& r : per) {
      if (r.entry.verdict != Verdict::Singular) continue;
      const int nk = static_cast<int>(r.centre.size());
      MatXc M(nk, nc);
      for (int i = 0; i < nk; ++i) M.row(i) = (r.entry.k[i] / k_max) * r.centre[i].transpose();
      Eigen::JacobiSVD<MatXc> svd(M, Eigen::ComputeThinV);
      VecXc v = svd.matrixV().col(0).conjugate();
      int big = 0;
      for (int c = 1; c < nc; ++c)
        if (std::abs(v[c]) > std::abs(v[big]) * (1 + 1e-12)) big = c;
      v *= std::conj(v[big]) / std::abs(v[big]);
      v[big] = std::abs(v[big]);
      PolEntry p;
      p.wf = std::move(r.entry);
      p.fibre.assign(v.data(), v.data() + nc);
      const auto& sv = svd.singularValues();
      p.dominance = (nc > 1 && sv[1] > 0) ? sv[0] / sv[1] : std::numeric_limits<double>::infinity();
      out.push_back(std::move(p));
    }
  return out;
}

WFReport wf_detect_two_point(const Sample& slice, const DetectorConfig& cfg,
                             const std::vector<std::pair<Vec4, Vec4>>& pairs) {
  if (slice.grid.dim != 2) throw Error(ErrorCode::InvalidArgument, "two-point slices are 2-dimensional");
  std::vector<std::array<double, 2>> bases;
  for (const auto& [x, y] : pairs) {
    Vec4 z = x - y;
    double scale = std::max(1.0, z.norm());
    if (std::abs(z[2]) > 1e-12 * scale || std::abs(z[3]) > 1e-12 * scale)
      throw Error(ErrorCode::InvalidArgument, "pair separation leaves the (z0, z1) slice");
    bases.push_back({z[0], z[1]});
  }
  WFReport rep = wf_detect(slice, cfg, bases);
  const size_t per = rep.entries.size() / std::max<size_t>(1, pairs.size());
  for (size_t i = 0; i < rep.entries.size(); ++i) {
    auto& e = rep.entries[i];
    const auto& pr = pairs[i / per];
    e.two_point = true;
    e.x = pr.first;
    e.y = pr.second;
    e.xi = Vec4(e.direction[0], e.direction[1], 0.0, 0.0);
    e.eta = -e.xi;
  }
  return rep;
}

Sample apply_matrix(const Sample& sample, const MatXc& E) {
  if (E.cols() != sample.components) throw Error(ErrorCode::InvalidArgument, "matrix does not match the components");
  Sample out = sample;
  out.components = static_cast<int>(E.rows());
  const size_t n = sample.grid.size();
  out.values.assign(n * out.components, 0.0);
  VecXc u(sample.components);
  for (size_t p = 0; p < n; ++p) {
    for (int c = 0; c < sample.components; ++c) u[c] = sample.values[p * sample.components + c];
    VecXc v = E * u;
    for (int c = 0; c < out.components; ++c) out.values[p * out.components + c] = v[c];
  }
  return out;
}

double fibre_angle(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "fibres of different length");
  cplx dot = 0.0;
  double na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += std::conj(a[i]) * b[i];
    na += std::norm(a[i]);
    nb += std::norm(b[i]);
  }
  if (na == 0 || nb == 0) throw Error(ErrorCode::InvalidArgument, "zero fibre");
  return std::acos(std::min(1.0, std::abs(dot) / std::sqrt(na * nb)));
}

}  // namespace microloc
