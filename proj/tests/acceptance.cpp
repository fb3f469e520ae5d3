// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "microloc/cli.hpp"
#include "microloc/flow.hpp"
#include "microloc/hadamard.hpp"
#include "microloc/spin.hpp"
#include "microloc/symbols.hpp"
#include "microloc/wfdetect.hpp"

using namespace microloc;
namespace fs = std::filesystem;

namespace {

const cplx I(0.0, 1.0);

struct Result {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Eigen::Vector3d random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d d(n(rng), n(rng), n(rng));
  return d / d.norm();
}

std::vector<MetricSpec> three_metrics() {
  return {MetricSpec::minkowski(), MetricSpec::schwarzschild(1.0), MetricSpec::frw_power(1.0, 0.5)};
}

Vec4 schwarzschild_point(std::mt19937_64& rng, double rmin, double rmax) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return Vec4(u(rng), rmin + (rmax - rmin) * u(rng), 0.4 + (kPi - 0.8) * u(rng), 2 * kPi * u(rng));
}

GridSpec line(double a, double b, double h) {
  GridSpec g;
  g.dim = 1;
  g.origin = {a, 0.0};
  g.spacing = {h, 1.0};
  g.count = {static_cast<int>(std::lround((b - a) / h)) + 1, 1};
  return g;
}

GridSpec square(double c0, double c1, double half, double h) {
  GridSpec g;
  g.dim = 2;
  int n = 2 * static_cast<int>(std::ceil(half / h)) + 1;
  g.origin = {c0 - (n / 2) * h, c1 - (n / 2) * h};
  g.spacing = {h, h};
  g.count = {n, n};
  return g;
}

Result clifford() {
  Result r;
  std::mt19937_64 rng(1);
  for (const auto& spec : three_metrics()) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      auto c = metric_at(spec, spec.sample_point(rng), CacheLevel::Metric);
      worst = std::max(worst, anticommutator_residual(gamma_curved(c), c.g_inv));
    }
    r.note(spec.name() + " " + sci(worst));
    r.require(worst < 1e-10, spec.name() + " residual");
  }
  return r;
}

Result nabla_gamma() {
  Result r;
  std::mt19937_64 rng(2);
  for (const auto& spec : three_metrics()) {
    double fine = 0.0, half = 0.0;
    for (int i = 0; i < 10; ++i) {
      Vec4 x = spec.sample_point(rng);
      fine = std::max(fine, nabla_gamma_residual(spec, x, 1e-4));
      half = std::max(half, nabla_gamma_residual(spec, x, 5e-5));
    }
    r.require(fine < 1e-5, spec.name() + " residual");
    if (fine > 1e-13) {
      double order = std::log2(fine / half);
      r.note(spec.name() + " " + sci(fine) + " order " + std::to_string(order).substr(0, 4));
      r.require(order >= 1.9, spec.name() + " order");
    } else {
      r.note(spec.name() + " " + sci(fine) + " (exact)");
    }
  }
  return r;
}

Result rpt() {
  Result r;
  unsigned seed = 3;
  double worst = 0.0;
  int samples = 0;
  for (const auto& spec : three_metrics())
    for (const char* family : {"scalar-wave", "maxwell-lorentz", "dirac", "dirac-adjoint"}) {
      auto f = rpt_factorize(make_operator(family, spec, 0.5), 200, seed++, std::numeric_limits<double>::infinity());
      worst = std::max(worst, f.max_residual);
      samples += f.samples;
      r.require(f.samples == 200 && f.max_residual < 1e-12, spec.name() + " " + family);
    }
  r.note(std::to_string(samples) + " samples, worst " + sci(worst));
  return r;
}

Result null_constraint() {
  Result r;
  auto sch = MetricSpec::schwarzschild(1.0);
  PhasePoint ps = photon_sphere_start(1.0);
  auto c = metric_at(sch, ps.x, CacheLevel::Metric);
  double period = 2 * kPi / std::abs(2.0 * (c.g_inv * ps.xi)[3]);
  FlowOptions loose;
  loose.drift_tolerance = std::numeric_limits<double>::infinity();

  auto sphere = integrate_bicharacteristic(sch, ps, 0.0, 10.0 * period, 500, loose);
  double dr = 0.0;
  for (const auto& p : sphere.points) dr = std::max(dr, std::abs(p.x[1] - 3.0));
  r.require(dr < 1e-6, "photon sphere radius");
  r.require(sphere.max_drift() < 1e-9, "photon sphere drift");

  std::mt19937_64 rng(4);
  double worst = sphere.max_drift();
  int accepted = 0, left = 0;
  for (int i = 0; i < 30; ++i) {
    Vec4 x = schwarzschild_point(rng, 3.5, 20.0);
    PhasePoint p{x, null_covector(sch, x, random_direction(rng))};
    try {
      auto s = integrate_bicharacteristic(sch, p, 0.0, 10.0 * period, 200, loose);
      worst = std::max(worst, s.max_drift());
      ++accepted;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LeftDomain) throw;
      ++left;
    }
  }
  r.require(worst < 1e-9, "drift bound");
  r.require(accepted >= 10, "enough accepted strips");
  r.note("|r-3M| " + sci(dr) + ", max |q|/|xi0|^2 " + sci(worst) + " over " + std::to_string(accepted) +
         " strips (" + std::to_string(left) + " fell in)");
  return r;
}

VecXc kernel_spinor(const MetricSpec& s, const PhasePoint& p) {
  auto gs = gamma_curved(metric_at(s, p.x, CacheLevel::Metric));
  return VecXc(slash(gs, p.xi) * Vec4c(cplx(1, 0.2), cplx(-0.3, 0.5), cplx(0.7, 0), cplx(0.1, -0.4)));
}

Result dencker() {
  Result r;
  std::mt19937_64 rng(5);
  double dp = 0.0, dev = 0.0;
  for (const auto& spec : {MetricSpec::minkowski(), MetricSpec::schwarzschild(1.0)}) {
    for (int i = 0; i < 3; ++i) {
      Vec4 x = spec.is_minkowski() ? spec.sample_point(rng) : schwarzschild_point(rng, 6.0, 12.0);
      PhasePoint p{x, null_covector(spec, x, random_direction(rng))};
      auto s = integrate_bicharacteristic(spec, p, 0.0, 1.0, 100);
      auto check = [&](const OperatorSpec& op, TransportMode mode, const VecXc& w0) {
        auto dedicated = hamilton_orbit(make_dencker(op, mode), s, w0);
        for (const auto& v : dencker_derivative(make_dencker(op, mode), dedicated.strip, dedicated.fibre))
          dp = std::max(dp, v.norm() / w0.norm());
        auto generic = hamilton_orbit(make_dencker(op, TransportMode::Generic), s, w0);
        for (size_t k = 0; k < s.size(); ++k) dev = std::max(dev, ray_angle(dedicated.fibre[k], generic.fibre[k]));
      };
      check(dirac_operator(spec, 0.7), TransportMode::Spin, kernel_spinor(spec, p));
      VecXc a0(4);
      a0 << 0.2, I, 0.5, -0.3;
      check(maxwell_lorentz_operator(spec), TransportMode::LeviCivita, a0);
    }
  }
  r.require(dp < 1e-5, "|D_P w|");
  r.require(dev < 1e-5, "generic vs dedicated");
  r.note("|D_P w| " + sci(dp) + ", angular deviation " + sci(dev));
  return r;
}

Result mass_independence() {
  Result r;
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (const auto& spec : {MetricSpec::minkowski(), MetricSpec::schwarzschild(1.0)})
    for (int i = 0; i < 3; ++i) {
      Vec4 x = spec.is_minkowski() ? spec.sample_point(rng) : schwarzschild_point(rng, 6.0, 12.0);
      PhasePoint p{x, null_covector(spec, x, random_direction(rng))};
      auto s = integrate_bicharacteristic(spec, p, 0.0, 2.0, 100);
      VecXc w0 = kernel_spinor(spec, p);
      auto a = hamilton_orbit(make_dencker(dirac_operator(spec, 0.0), TransportMode::Generic), s, w0);
      auto b = hamilton_orbit(make_dencker(dirac_operator(spec, 1.0), TransportMode::Generic), s, w0);
      for (size_t k = 0; k < s.size(); ++k) worst = std::max(worst, projective_distance(a.fibre[k], b.fibre[k]));
    }
  r.require(worst < 1e-8, "projective deviation");
  r.note("max projective deviation " + sci(worst));
  return r;
}

Result kernel_computation() {
  Result r;
  std::mt19937_64 rng(7);
  double gap = std::numeric_limits<double>::infinity(), dev = 0.0;
  int bad = 0, n = 0;
  for (const auto& spec : {MetricSpec::minkowski(), MetricSpec::schwarzschild(1.0)})
    for (int i = 0; i < 50; ++i, ++n) {
      Vec4 x = spec.sample_point(rng);
      Vec4 xi = null_covector(spec, x, random_direction(rng));
      auto k = clifford_kernel(gamma_curved(metric_at(spec, x, CacheLevel::Metric)), xi);
      if (k.dimension != 1) {
        ++bad;
        continue;
      }
      gap = std::min(gap, k.gap);
      VecXc expect(5);
      expect << 0.0, xi[0], xi[1], xi[2], xi[3];
      dev = std::max(dev, projective_distance(VecXc(k.basis), expect));
    }
  r.require(bad == 0, "one-dimensional kernel");
  r.require(gap >= 1e6, "singular-value gap");
  r.require(dev < 1e-10, "kernel spanned by slash(xi)");
  r.note(std::to_string(n) + " null covectors, min gap " + sci(gap) + ", deviation " + sci(dev));
  return r;
}

Result lichnerowicz() {
  Result r;
  const double m = 0.5;
  auto mink = MetricSpec::minkowski();
  Vec4 k(std::sqrt(m * m + 0.49 + 0.09), 0.7, -0.3, 0.0);
  auto gs = gamma_curved(metric_at(mink, Vec4::Zero(), CacheLevel::Metric));
  Vec4c u = (slash(gs, k) + m * Mat4c::Identity()) * Vec4c(1, 0.5, 0, -0.2);
  auto plane = lichnerowicz_check(
      mink, sample_spinor_field(Vec4(0.3, -0.2, 0.1, 0.4), 1e-2, 2, [&](const Vec4& x) -> Vec4c {
        return u * std::exp(-I * k.dot(x));
      }),
      m);
  r.require(plane.max_residual < 1e-6, "plane wave residual");

  auto sch = MetricSpec::schwarzschild(1.0);
  Vec4 c(0.0, 7.0, 1.2, 0.4);
  auto bump = [c](const Vec4& x) -> Vec4c {
    cplx e = std::exp(-(x - c).squaredNorm()) * std::exp(cplx(0, 0.7 * x[1]));
    return Vec4c(e, 0.5 * e, I * e, -0.25 * e);
  };
  double r1 = lichnerowicz_check(sch, sample_spinor_field(c, 2e-2, 2, bump), m).max_residual;
  double r2 = lichnerowicz_check(sch, sample_spinor_field(c, 1e-2, 2, bump), m).max_residual;
  double order = std::log2(r1 / r2);
  r.require(order >= 1.9, "Schwarzschild order");
  r.note("plane wave " + sci(plane.max_residual) + ", Schwarzschild " + sci(r1) + " -> " + sci(r2) + " order " +
         std::to_string(order).substr(0, 4));
  return r;
}

Result wf_examples() {
  Result r;
  const double eps = 0.01;
  auto d1 = wf_detect(sample_examples("delta", line(-10, 10, eps / 8), eps), {}, {{0.0, 0.0}});
  r.require(d1.count(Verdict::Singular) == 2, "delta 1-d");
  DetectorConfig c64;
  c64.sectors = 64;
  c64.width_factor = 4.0;
  auto d2 = wf_detect(sample_examples("delta", square(0, 0, 1.8, eps), eps, {true}), c64, {{0.0, 0.0}});
  r.require(d2.count(Verdict::Singular) == 64, "delta 2-d, 64 sectors");

  int wrong = 0;
  for (double e : {0.04, 0.02, 0.01}) {
    const double R = 430 * e;
    auto rep = wf_detect(sample_examples("one_over_x_plus_ieps", line(-R - e, R + e, e / 8), e), {}, {{0.0, 0.0}});
    for (const auto& en : rep.entries)
      wrong += (en.verdict == Verdict::Singular) != (en.direction[0] > 0);
  }
  r.require(wrong <= 1, "1/(x+i eps) sign pattern");

  DetectorConfig smooth_cfg;
  smooth_cfg.k_max = 20;
  auto s1 = wf_detect(sample_examples("smooth", line(-10, 10, 0.01), 0.05), smooth_cfg,
                      {{0.0, 0.0}, {1.0, 0.0}, {-2.5, 0.0}});
  smooth_cfg.sectors = 64;
  auto s2 = wf_detect(sample_examples("smooth", square(0, 0, 4.4, 0.02), 0.05), smooth_cfg, {{0.0, 0.0}});
  r.require(s1.count(Verdict::Singular) + s2.count(Verdict::Singular) == 0, "smooth control");
  r.note("delta " + std::to_string(d1.count(Verdict::Singular)) + "/2 and " +
         std::to_string(d2.count(Verdict::Singular)) + "/64 singular, 1/(x+i eps) misclassified " +
         std::to_string(wrong) + ", smooth singular " +
         std::to_string(s1.count(Verdict::Singular) + s2.count(Verdict::Singular)));
  return r;
}

Result pol_examples() {
  Result r;
  const double eps = 0.01;
  DetectorConfig cfg;
  cfg.k_max = 0.2 / eps;
  auto p = pol_detect(sample_examples("v_laplace_v", line(-9, 9, eps / 8), eps), cfg, {{0.0, 0.0}});
  r.require(!p.empty(), "(v, Laplace v) singular");
  double dom = std::numeric_limits<double>::infinity(), ang = 0.0;
  for (const auto& e : p) {
    dom = std::min(dom, e.dominance);
    ang = std::max(ang, fibre_angle(e.fibre, {0.0, 1.0}));
  }
  r.require(dom > 10, "dominance");
  r.require(ang < 5.0 * kPi / 180, "fibre (0, 1)");

  DetectorConfig c2;
  c2.sectors = 32;
  c2.width_factor = 6.0;
  auto g = pol_detect(sample_examples("grad_delta_2d", square(0, 0, 3.0, eps), eps, {true}), c2, {{0.0, 0.0}});
  size_t good = 0;
  for (const auto& e : g)
    if (fibre_angle(e.fibre, {e.wf.direction[0], e.wf.direction[1]}) < 5.0 * kPi / 180) ++good;
  r.require(!g.empty() && good >= 0.9 * g.size(), "grad delta within 5 degrees");
  r.note("(v, Laplace v) dominance " + sci(dom) + ", angle " + sci(ang) + " rad; grad delta " +
         std::to_string(good) + "/" + std::to_string(g.size()) + " sectors within 5 degrees");
  return r;
}

Result two_point_slices() {
  Result r;
  const double eps = 0.004;
  DetectorConfig cfg;
  cfg.sectors = 8;
  const double half = 8.6 * cfg.width_factor / (0.2 / eps) + 0.01;
  Vec4 y(0.2, -0.4, 0.3, 0.0);
  Vec4 x = y + Vec4(1.5, 1.5, 0, 0);
  // predicted direction: xi proportional to (1, -1, 0, 0) with xi0 > 0
  auto pred = predict_wf_hadamard_scalar(MetricSpec::minkowski(), x, y);
  r.require(pred.elements.size() == 1, "prediction for the null pair");
  if (!r.pass) return r;
  Vec4 xi = pred.elements[0].xi;
  double pred_angle = std::atan2(xi[1], xi[0]);

  auto rn = wf_detect_two_point(sample_examples("minkowski_lambda", square(1.5, 1.5, half, eps / 2), eps, {true}),
                                cfg, {{x, y}});
  int singular = 0, matched = 0;
  const double sector_width = 2 * kPi / cfg.sectors;
  for (const auto& e : rn.entries) {
    double d = std::remainder(e.angle - pred_angle, 2 * kPi);
    if (e.verdict == Verdict::Singular) {
      ++singular;
      r.require(std::abs(d) <= sector_width + 1e-9, "singular sector " + std::to_string(e.sector) + " off-prediction");
      if (std::abs(d) < 0.5 * sector_width) ++matched;
    }
    if (std::abs(std::abs(d) - kPi) < 0.5 * sector_width)
      r.require(e.verdict == Verdict::Regular, "wrong-frequency direction regular");
  }
  r.require(matched == 1, "predicted sector singular");

  Vec4 xs = y + Vec4(0.0, 3.0, 0, 0);
  auto rs = wf_detect_two_point(sample_examples("minkowski_lambda", square(0.0, 3.0, half, eps / 2), eps, {true}),
                                cfg, {{xs, y}});
  r.require(rs.count(Verdict::Regular) == rs.entries.size(), "spacelike pair all regular");
  r.note("null pair " + std::to_string(singular) + " singular sector(s), spacelike pair " +
         std::to_string(rs.count(Verdict::Regular)) + "/" + std::to_string(rs.entries.size()) + " regular");
  return r;
}

Result predictor_transport() {
  Result r;
  auto sch = MetricSpec::schwarzschild(1.0);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  double worst = 0.0;
  int pairs = 0;
  while (pairs < 20) {
    Vec4 x = schwarzschild_point(rng, 6.0, 12.0);
    auto cx = metric_at(sch, x, CacheLevel::Metric);
    Vec4 xi = future_normalize(cx, null_covector(sch, x, random_direction(rng)));
    double tau = u(rng);
    BicharStrip strip;
    try {
      strip = integrate_bicharacteristic(sch, {x, xi}, 0.0, tau, 64);
    } catch (const Error&) {
      continue;
    }
    Vec4 y = strip.points.back().x;
    auto pred = predict_pol_dirac(sch, x, y);
    ++pairs;
    if (pred.elements.size() != 1) {
      r.require(false, "pair " + std::to_string(pairs) + " has " + std::to_string(pred.elements.size()) + " elements");
      continue;
    }
    // J_gamma from an independent path: carry the identity back from y along the reversed strip
    auto back = integrate_bicharacteristic(sch, {y, -strip.points.back().xi}, 0.0, tau, 64);
    Mat4c J = transport_spinor(back, Mat4c(Mat4c::Identity()), SpinorSide::BispinorRightOnly).bispinor(64);
    Mat4c carried = pred.elements[0].fibre * J;
    worst = std::max(worst, projective_distance(flatten(carried), flatten(slash(gamma_curved(cx), xi))));
  }
  r.require(worst < 1e-5, "projective deviation");
  r.note(std::to_string(pairs) + " pairs, max deviation " + sci(worst));
  return r;
}

Result product_criterion() {
  Result r;
  auto m = MetricSpec::minkowski();
  auto s = MetricSpec::schwarzschild(1.0);
  Vec4 xs(0, 6, 1.3, 0.2);
  struct Pair {
    MetricSpec spec;
    Vec4 a, b;
  };
  std::vector<Pair> pairs{{m, Vec4::Zero(), Vec4::Zero()},     {m, Vec4::Zero(), Vec4(1, 0, 1, 0)},
                          {m, Vec4::Zero(), Vec4(0.5, 1, 0, 0)}, {m, Vec4(1, 2, 0, 0), Vec4::Zero()},
                          {s, xs, xs}};
  std::mt19937_64 rng(13);
  for (int i = 0; i < 3; ++i) {
    Vec4 x = schwarzschild_point(rng, 6.0, 12.0);
    Vec4 xi = future_normalize(metric_at(s, x, CacheLevel::Metric), null_covector(s, x, random_direction(rng)));
    pairs.push_back({s, x, integrate_bicharacteristic(s, {x, xi}, 0.0, 0.8, 16).points.back().x});
  }
  size_t offending = 0;
  for (const auto& p : pairs) {
    auto h = predict_wf_hadamard_scalar(p.spec, p.a, p.b).elements;
    r.require(product_admissible(h, h).admissible, "Hadamard pair " + p.spec.name());
    auto f = predict_wf_feynman(p.spec, p.a, p.b).elements;
    auto ad = product_admissible(f, f);
    bool diagonal = p.a == p.b;
    r.require(ad.admissible != diagonal, "Feynman admissibility on " + p.spec.name());
    for (auto [i, j] : ad.offending) r.require(f[i].diagonal && f[j].diagonal, "offending pair off the diagonal");
    offending += ad.offending.size();
  }
  r.note(std::to_string(pairs.size()) + " pairs; Feynman offending pairs " + std::to_string(offending) +
         ", all diagonal");
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Result determinism() {
  Result r;
  fs::path root = fs::temp_directory_path() / "microloc_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream seeds(root / "seeds.txt");
    for (int i = 0; i < 8; ++i) seeds << i << "\n";
  }
  const std::vector<std::pair<std::string, std::string>> configs{
      {"propagate",
       "[metric]\nname = schwarzschild\nmass = 1\n[command]\nname = propagate\nx = [0, 8, 1.2, 0.3]\n"
       "tau1 = 5\nsteps = 50\nseed_list = \"" + (root / "seeds.txt").string() + "\"\n"},
      {"transport",
       "[metric]\nname = schwarzschild\nmass = 1\n[command]\nname = transport\noperator = dirac\nmode = spin\n"
       "x = [0, 6, 1.3, 0]\ndirection = [0.5, 0.5, -0.2]\ntau1 = 1\nsteps = 40\n"},
      {"predict",
       "[metric]\nname = minkowski\n[command]\nname = predict\nkind = feynman\n"
       "pairs = [[0,0,0,0, 0,0,0,0], [0,0,0,0, 1,0,1,0]]\n"},
      {"detect",
       "[command]\nname = detect\nsample = delta\ndim = 1\norigin = [-10]\nspacing = [0.00125]\ncount = [16001]\n"
       "eps = 0.01\nbases = [[0], [5]]\npolarization = true\n"},
      {"verify", "[command]\nname = verify\n"}};
  int files = 0;
  for (const auto& [name, text] : configs) {
    fs::path cfg = root / (name + ".ini");
    std::ofstream(cfg) << text;
    std::vector<fs::path> outs;
    for (int run = 0; run < 2; ++run) {
      CliOptions opt;
      opt.config_path = cfg.string();
      opt.out_dir = (root / (name + "_" + std::to_string(run))).string();
      opt.jobs = run == 0 ? 1 : 4;
      std::ostringstream out, err;
      int code = run_command(opt, out, err);
      r.require(code == 0, name + " exit code " + std::to_string(code) + " " + err.str());
      outs.push_back(opt.out_dir);
    }
    for (const auto& entry : fs::directory_iterator(outs[0])) {
      auto fname = entry.path().filename();
      if (fname == "run_meta.json") continue;  // timestamps live here by design
      ++files;
      r.require(fs::exists(outs[1] / fname) && slurp(entry.path()) == slurp(outs[1] / fname),
                name + "/" + fname.string() + " differs");
    }
  }
  fs::remove_all(root);
  r.note(std::to_string(files) + " data files identical across runs with 1 and 4 jobs");
  return r;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Result()> run;
  double time_limit;  // seconds, <= 0: none
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Clifford identity", clifford, 1.0},
      {2, "covariant constancy of gamma", nabla_gamma, 5.0},
      {3, "real principal type factorizations", rpt, 1.0},
      {4, "null constraint conservation", null_constraint, 10.0},
      {5, "Dencker reduction", dencker, 30.0},
      {6, "mass independence of the Dirac connection", mass_independence, 0.0},
      {7, "kernel of slash(xi) on span{1, gamma}", kernel_computation, 0.0},
      {8, "Lichnerowicz identity", lichnerowicz, 0.0},
      {9, "wave front detector examples", wf_examples, 30.0},
      {10, "polarization detector examples", pol_examples, 0.0},
      {11, "two-point slices vs prediction", two_point_slices, 0.0},
      {12, "polarization predictor vs transport", predictor_transport, 0.0},
      {13, "product criterion", product_criterion, 0.0},
      {14, "CLI determinism", determinism, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Result res;
    try {
      res = c.run();
    } catch (const std::exception& e) {
      res.pass = false;
      res.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      res.pass = false;
      res.note("runtime over " + std::to_string(static_cast<int>(c.time_limit)) + " s");
    }
    failed += !res.pass;
    std::printf("criterion %2d %s  %-42s %7.2f s  %s\n", c.id, res.pass ? "PASS" : "FAIL", c.title, secs,
                res.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed ? 1 : 0;
}
