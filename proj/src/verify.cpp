#include "microloc/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "microloc/flow.hpp"
#include "microloc/spin.hpp"
#include "microloc/symbols.hpp"

namespace microloc {

namespace {

const cplx I(0.0, 1.0);

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Eigen::Vector3d random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d d(n(rng), n(rng), n(rng));
  return d / d.norm();
}

struct Outcome {
  double residual = 0.0;
  int samples = 0;
  bool extra_ok = true;  // conditions other than residual <= tolerance
  std::string detail;
};

Outcome check_anticommutator(const MetricSpec& spec, std::mt19937_64& rng) {
  Outcome o;
  for (int i = 0; i < 100; ++i) {
    auto c = metric_at(spec, spec.sample_point(rng), CacheLevel::Metric);
    o.residual = std::max(o.residual, anticommutator_residual(gamma_curved(c), c.g_inv));
    ++o.samples;
  }
  return o;
}

Outcome check_nabla_gamma(const MetricSpec& spec, std::mt19937_64& rng) {
  Outcome o;
  double coarse = 0.0;
  for (int i = 0; i < 10; ++i) {
    Vec4 x = spec.sample_point(rng);
    o.residual = std::max(o.residual, nabla_gamma_residual(spec, x, 1e-4));
    coarse = std::max(coarse, nabla_gamma_residual(spec, x, 2e-4));
    ++o.samples;
  }
  if (o.residual > 1e-12) {
    double order = std::log2(coarse / o.residual);
    o.detail = "order " + fmt(order);
    o.extra_ok = order >= 1.9;
  }
  return o;
}

Outcome check_rpt(const MetricSpec& spec, std::mt19937_64& rng) {
  Outcome o;
  for (const char* family : {"scalar-wave", "maxwell-lorentz", "dirac", "dirac-adjoint"}) {
    auto f = rpt_factorize(make_operator(family, spec, 0.5), 200, static_cast<unsigned>(rng()),
                           std::numeric_limits<double>::infinity());
    o.residual = std::max(o.residual, f.max_residual);
    o.samples += f.samples;
    o.detail += std::string(o.detail.empty() ? "" : ", ") + family + " " + fmt(f.max_residual);
  }
  return o;
}

Outcome check_null_drift(const MetricSpec& spec, std::mt19937_64& rng, const FlowOptions& flow) {
  Outcome o;
  int left = 0;
  FlowOptions loose = flow;
  loose.drift_tolerance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10; ++i) {
    Vec4 x = spec.sample_point(rng);
    if (spec.is_schwarzschild()) x[1] = std::max(x[1], 6.0 * std::get<Schwarzschild>(spec.kind()).mass);
    PhasePoint p{x, null_covector(spec, x, random_direction(rng))};
    try {
      auto s = integrate_bicharacteristic(spec, p, 0.0, 5.0, 200, loose);
      o.residual = std::max(o.residual, s.max_drift());
      ++o.samples;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LeftDomain && e.code() != ErrorCode::OutOfDomain) throw;
      ++left;
    }
  }
  if (spec.is_schwarzschild()) {
    double m = std::get<Schwarzschild>(spec.kind()).mass;
    auto s = integrate_bicharacteristic(spec, photon_sphere_start(m), 0.0, 200.0 * m, 400, loose);
    o.residual = std::max(o.residual, s.max_drift());
    double dr = 0.0;
    for (const auto& p : s.points) dr = std::max(dr, std::abs(p.x[1] - 3.0 * m));
    o.detail = "photon sphere |r-3M| " + fmt(dr);
    o.extra_ok = dr < 1e-6 * m;
    ++o.samples;
  }
  if (left) o.detail += std::string(o.detail.empty() ? "" : ", ") + std::to_string(left) + " strips left the domain";
  return o;
}

Outcome check_dencker(const MetricSpec& spec, std::mt19937_64& rng) {
  Outcome o;
  Vec4 x = spec.sample_point(rng);
  if (spec.is_schwarzschild()) x[1] = std::max(x[1], 6.0 * std::get<Schwarzschild>(spec.kind()).mass);
  PhasePoint p{x, null_covector(spec, x, random_direction(rng))};
  auto s = integrate_bicharacteristic(spec, p, 0.0, 1.0, 200);
  auto gs = gamma_curved(metric_at(spec, x, CacheLevel::Metric));
  Vec4c chi(1.0, 0.5 * I, -0.25, 0.1);
  auto worst = [&](const DenckerSpec& d, const VecXc& w0, const char* name) {
    auto orbit = hamilton_orbit(d, s, w0);
    double r = 0.0;
    for (const auto& v : dencker_derivative(d, orbit.strip, orbit.fibre)) r = std::max(r, v.norm() / w0.norm());
    o.residual = std::max(o.residual, r);
    o.samples += static_cast<int>(s.size());
    o.detail += std::string(o.detail.empty() ? "" : ", ") + name + " " + fmt(r);
  };
  worst(make_dencker(dirac_operator(spec, 0.7), TransportMode::Spin), slash(gs, p.xi) * chi, "dirac");
  worst(make_dencker(dirac_adjoint_operator(spec, 0.7), TransportMode::Spin), slash(gs, p.xi).transpose() * chi,
        "dirac-adjoint");
  VecXc a0(4);
  a0 << 0.2, I, 0.5, -0.3;
  worst(make_dencker(maxwell_lorentz_operator(spec), TransportMode::LeviCivita), a0, "maxwell");
  return o;
}

Outcome check_lichnerowicz(const MetricSpec& spec, std::mt19937_64& rng) {
  Outcome o;
  const double m = 0.5;
  if (spec.is_minkowski()) {
    Vec4 k(std::sqrt(m * m + 0.49 + 0.09), 0.7, -0.3, 0.0);
    auto gs = gamma_curved(metric_at(spec, Vec4::Zero(), CacheLevel::Metric));
    Vec4c u = (slash(gs, k) + m * Mat4c::Identity()) * Vec4c(1, 0.5, 0, -0.2);
    Vec4 c = spec.sample_point(rng);
    auto field = sample_spinor_field(c, 1e-2, 2, [&](const Vec4& x) -> Vec4c { return u * std::exp(-I * k.dot(x)); });
    auto rep = lichnerowicz_check(spec, field, m);
    o.residual = rep.max_residual;
    o.samples = rep.points;
    o.detail = "plane wave, h = 1e-2";
    return o;
  }
  Vec4 c = spec.sample_point(rng);
  if (spec.is_schwarzschild()) c[1] = std::max(c[1], 6.0 * std::get<Schwarzschild>(spec.kind()).mass);
  auto bump = [c](const Vec4& x) -> Vec4c {
    cplx e = std::exp(-(x - c).squaredNorm()) * std::exp(cplx(0, 0.7 * x[1]));
    return Vec4c(e, 0.5 * e, I * e, -0.25 * e);
  };
  double r1 = lichnerowicz_check(spec, sample_spinor_field(c, 2e-2, 2, bump), m).max_residual;
  auto rep = lichnerowicz_check(spec, sample_spinor_field(c, 1e-2, 2, bump), m);
  // curved case: second-order convergence, residual on the finer grid
  o.residual = rep.max_residual;
  o.samples = rep.points;
  double order = std::log2(r1 / rep.max_residual);
  o.detail = "order " + fmt(order) + ", h = 1e-2";
  o.extra_ok = order >= 1.9;
  return o;
}

Outcome check_kernel_form(const MetricSpec& spec, std::mt19937_64& rng) {
  Outcome o;
  double min_gap = std::numeric_limits<double>::infinity();
  int bad_dim = 0;
  for (int i = 0; i < 100; ++i) {
    Vec4 x = spec.sample_point(rng);
    Vec4 xi = null_covector(spec, x, random_direction(rng));
    auto gs = gamma_curved(metric_at(spec, x, CacheLevel::Metric));
    auto k = clifford_kernel(gs, xi);
    if (k.dimension != 1) {
      ++bad_dim;
      continue;
    }
    min_gap = std::min(min_gap, k.gap);
    VecXc expect(5), got(5);
    expect << 0.0, xi[0], xi[1], xi[2], xi[3];
    got = k.basis;
    o.residual = std::max(o.residual, projective_distance(got, expect));
    ++o.samples;
  }
  o.detail = "min gap " + fmt(min_gap);
  if (bad_dim) o.detail += ", " + std::to_string(bad_dim) + " kernels not one-dimensional";
  o.extra_ok = bad_dim == 0 && min_gap >= 1e6;
  return o;
}

}  // namespace

const std::vector<std::string>& verify_check_names() {
  static const std::vector<std::string> names{"anticommutator",    "nabla_gamma",  "rpt",        "null_drift",
                                              "dencker_transport", "lichnerowicz", "kernel_form"};
  return names;
}

double default_tolerance(const std::string& check) {
  static const std::map<std::string, double> t{{"anticommutator", 1e-10}, {"nabla_gamma", 1e-5},
                                               {"rpt", 1e-12},            {"null_drift", 1e-9},
                                               {"dencker_transport", 1e-5}, {"lichnerowicz", 1e-6},
                                               {"kernel_form", 1e-10}};
  auto it = t.find(check);
  if (it == t.end()) throw Error(ErrorCode::NotRecognized, "unknown check '" + check + "'");
  return it->second;
}

std::vector<CheckResult> run_verify(const VerifyOptions& opt) {
  std::vector<std::string> checks = opt.checks.empty() ? verify_check_names() : opt.checks;
  for (const auto& c : checks) default_tolerance(c);  // validates names
  for (const auto& [name, tol] : opt.tolerances) {
    default_tolerance(name);
    if (!(tol > 0)) throw Error(ErrorCode::ConfigError, "tolerance for '" + name + "' must be positive");
  }
  if (!(opt.tolerance_scale > 0)) throw Error(ErrorCode::ConfigError, "tolerance scale must be positive");

  struct Task {
    size_t check, metric;
  };
  std::vector<Task> tasks;
  for (size_t c = 0; c < checks.size(); ++c)
    for (size_t m = 0; m < opt.metrics.size(); ++m) tasks.push_back({c, m});
  std::vector<CheckResult> out(tasks.size());

  auto run = [&](size_t t) {
    const auto& name = checks[tasks[t].check];
    const auto& spec = opt.metrics[tasks[t].metric];
    double tol = opt.tolerances.count(name) ? opt.tolerances.at(name) : default_tolerance(name);
    // curved Lichnerowicz residuals are discretization errors at h = 1e-2
    if (name == "lichnerowicz" && !spec.is_minkowski() && !opt.tolerances.count(name)) tol = 1e-3;
    tol *= opt.tolerance_scale;
    FlowOptions flow;
    std::mt19937_64 rng(opt.seed + 7919u * static_cast<unsigned>(tasks[t].check) + 104729u * static_cast<unsigned>(tasks[t].metric));
    CheckResult r;
    r.check = name;
    r.metric = spec.name();
    r.tolerance = tol;
    Outcome o;
    try {
      if (name == "anticommutator") o = check_anticommutator(spec, rng);
      else if (name == "nabla_gamma") o = check_nabla_gamma(spec, rng);
      else if (name == "rpt") o = check_rpt(spec, rng);
      else if (name == "null_drift") o = check_null_drift(spec, rng, flow);
      else if (name == "dencker_transport") o = check_dencker(spec, rng);
      else if (name == "lichnerowicz") o = check_lichnerowicz(spec, rng);
      else o = check_kernel_form(spec, rng);
      r.max_residual = o.residual;
      r.samples = o.samples;
      r.detail = o.detail;
      r.pass = std::isfinite(o.residual) && o.residual <= tol && o.extra_ok;
    } catch (const Error& e) {
      r.max_residual = std::numeric_limits<double>::infinity();
      r.detail = e.what();
      r.pass = false;
    }
    out[t] = r;
  };

  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    for (size_t t = 0; t < tasks.size(); ++t) run(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (size_t t = next++; t < tasks.size(); t = next++) run(t);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace microloc
