#include "microloc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "microloc/flow.hpp"
#include "microloc/hadamard.hpp"
#include "microloc/io.hpp"
#include "microloc/spin.hpp"
#include "microloc/symbols.hpp"
#include "microloc/verify.hpp"
#include "microloc/wfdetect.hpp"

namespace microloc {

namespace {

namespace fs = std::filesystem;
const char* kVersion = "0.1.0";

struct Run {
  const CliOptions& opt;
  const Config& cfg;
  std::ostream& out;
  std::string format;
  int jobs = 1;
  std::vector<std::string> files;

  double scaled(const std::string& key, double fallback) const {
    return cfg.number("tolerance", key, fallback) * opt.tolerance_scale;
  }

  void write(const std::string& name, const std::string& content) {
    fs::path p = fs::path(opt.out_dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot write '" + p.string() + "'");
    f << content;
    files.push_back(name);
  }
};

template <class F>
void parallel_for(size_t n, int jobs, F&& fn) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (jobs == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

FlowOptions flow_options(const Run& r) {
  FlowOptions f;
  f.rtol = r.scaled("rtol", f.rtol);
  f.atol = r.scaled("atol", f.atol);
  f.drift_tolerance = r.scaled("drift", f.drift_tolerance);
  f.null_start_tolerance = r.scaled("null_start", f.null_start_tolerance);
  return f;
}

// A seed line holds either eight numbers (x then xi) or one integer, which
// draws a random frame direction at the configured base point.
std::vector<PhasePoint> read_seeds(const std::string& path, const MetricSpec& spec, const Vec4& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read seed list '" + path + "'");
  std::vector<PhasePoint> seeds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream is(line);
    std::vector<double> v;
    std::string tok;
    while (is >> tok) {
      char* end = nullptr;
      double d = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size())
        throw ConfigParseError("seed list '" + path + "': malformed number '" + tok + "'", lineno, 1);
      v.push_back(d);
    }
    if (v.empty()) continue;
    if (v.size() == 8) {
      seeds.push_back({Vec4(v[0], v[1], v[2], v[3]), Vec4(v[4], v[5], v[6], v[7])});
    } else if (v.size() == 1 && v[0] >= 0 && v[0] == std::floor(v[0])) {
      std::mt19937_64 rng(static_cast<uint64_t>(v[0]));
      std::normal_distribution<double> n;
      Eigen::Vector3d d(n(rng), n(rng), n(rng));
      seeds.push_back({base, null_covector(spec, base, d / d.norm())});
    } else {
      throw ConfigParseError("seed list '" + path + "': expected 8 numbers or one integer seed", lineno, 1);
    }
  }
  if (seeds.empty()) throw Error(ErrorCode::ConfigError, "seed list '" + path + "' is empty");
  return seeds;
}

std::vector<PhasePoint> starts(const Run& r, const MetricSpec& spec) {
  Vec4 x = r.cfg.vec4("command", "x");
  std::string list = !r.opt.seed_list.empty() ? r.opt.seed_list : r.cfg.string("command", "seed_list", "");
  if (!list.empty()) return read_seeds(list, spec, x);
  PhasePoint p;
  p.x = x;
  if (r.cfg.has("command", "xi")) {
    p.xi = r.cfg.vec4("command", "xi");
    if (r.cfg.boolean("command", "project_null", false)) p.xi = project_to_null(spec, x, p.xi);
  } else if (r.cfg.has("command", "direction")) {
    auto d = r.cfg.numbers("command", "direction");
    if (d.size() != 3) r.cfg.fail_at(r.cfg.value("command", "direction"), "'direction' needs 3 components");
    p.xi = null_covector(spec, x, Eigen::Vector3d(d[0], d[1], d[2]));
  } else {
    throw ConfigParseError("[command] needs 'xi' or 'direction'", r.cfg.section("command").line, r.cfg.section("command").column);
  }
  return {p};
}

std::string batch_name(size_t i, size_t n, const std::string& single, const std::string& ext) {
  if (n == 1) return single + "." + ext;
  char buf[32];
  std::snprintf(buf, sizeof buf, "seed_%04zu.", i);
  return buf + ext;
}

// results computed in parallel, written in index order; the first failure by index wins
template <class T, class Make, class Emit>
void batch(Run& r, size_t n, Make&& make, Emit&& emit) {
  std::vector<T> results(n);
  std::vector<std::exception_ptr> errors(n);
  parallel_for(n, r.jobs, [&](size_t i) {
    try {
      results[i] = make(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (size_t i = 0; i < n; ++i) emit(i, results[i]);
}

void cmd_propagate(Run& r, const MetricSpec& spec) {
  r.cfg.allow_only("command", {"name", "x", "xi", "direction", "project_null", "tau0", "tau1", "steps", "seed_list"});
  auto seeds = starts(r, spec);
  double t0 = r.cfg.number("command", "tau0", 0.0), t1 = r.cfg.number("command", "tau1", 10.0);
  int steps = r.cfg.integer("command", "steps", 100);
  auto fo = flow_options(r);
  batch<BicharStrip>(
      r, seeds.size(), [&](size_t i) { return integrate_bicharacteristic(spec, seeds[i], t0, t1, steps, fo); },
      [&](size_t i, const BicharStrip& s) {
        std::ostringstream os;
        if (r.format == "json") os << dump_json(to_json(s));
        else write_strip_csv(os, s);
        r.write(batch_name(i, seeds.size(), "strip", r.format), os.str());
      });
  r.out << "propagate: " << seeds.size() << " strip(s) written to " << r.opt.out_dir << "\n";
}

TransportMode parse_mode(const Run& r) {
  std::string m = r.cfg.string("command", "mode", "generic");
  if (m == "generic") return TransportMode::Generic;
  if (m == "spin") return TransportMode::Spin;
  if (m == "levi-civita") return TransportMode::LeviCivita;
  r.cfg.fail_at(r.cfg.value("command", "mode"), "mode must be generic, spin or levi-civita");
}

// first unit vector with a nonzero projection onto ker p(x, xi)
VecXc default_fibre(const OperatorSpec& op, const PhasePoint& p) {
  MatXc P = principal_symbol(op, p.x, p.xi);
  Eigen::JacobiSVD<MatXc> svd(P, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double scale = std::max(1.0, s.size() ? s[0] : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > 1e-8 * scale) ++rank;
  MatXc K = svd.matrixV().rightCols(P.cols() - rank);
  if (K.cols() == 0) throw Error(ErrorCode::KernelViolation, "principal symbol is invertible at the start point");
  for (Eigen::Index k = 0; k < P.cols(); ++k) {
    VecXc e = VecXc::Zero(P.cols());
    e[k] = 1.0;
    VecXc w = K * (K.adjoint() * e);
    if (w.norm() > 1e-6) {
      Eigen::Index big = 0;
      w.cwiseAbs().maxCoeff(&big);
      w *= std::abs(w[big]) / w[big];
      return w / w.norm();
    }
  }
  throw Error(ErrorCode::KernelViolation, "empty kernel");
}

void cmd_transport(Run& r, const MetricSpec& spec) {
  r.cfg.allow_only("command", {"name", "x", "xi", "direction", "project_null", "tau0", "tau1", "steps", "seed_list",
                               "operator", "mass", "mode", "fibre", "fibre_im"});
  std::string family = r.cfg.string("command", "operator");
  double mass = r.cfg.number("command", "mass", 0.0);
  TransportMode mode = parse_mode(r);
  if (mode == TransportMode::Spin && family != "dirac" && family != "dirac-adjoint")
    r.cfg.fail_at(r.cfg.value("command", "mode"), "spin transport needs a dirac or dirac-adjoint operator");
  if (mode == TransportMode::LeviCivita && family != "maxwell-lorentz")
    r.cfg.fail_at(r.cfg.value("command", "mode"), "levi-civita transport needs the maxwell-lorentz operator");
  OperatorSpec op;
  try {
    op = make_operator(family, spec, mass);
  } catch (const Error& e) {
    r.cfg.fail_at(r.cfg.value("command", "operator"), e.what());
  }
  auto dencker = make_dencker(op, mode);

  bool slash_fibre = false;
  std::vector<double> re, im;
  if (r.cfg.has("command", "fibre")) {
    const auto& v = r.cfg.value("command", "fibre");
    if (v.type == ConfigValue::Type::String) {
      if (v.text == "slash") {
        if (family != "dirac") r.cfg.fail_at(v, "fibre = slash needs the dirac operator");
        slash_fibre = true;
      } else if (v.text != "kernel") {
        r.cfg.fail_at(v, "fibre must be kernel, slash or an array of numbers");
      }
    } else {
      re = r.cfg.numbers("command", "fibre");
      im = r.cfg.has("command", "fibre_im") ? r.cfg.numbers("command", "fibre_im") : std::vector<double>(re.size(), 0.0);
      if (static_cast<int>(re.size()) != op.size || im.size() != re.size())
        r.cfg.fail_at(v, "fibre needs " + std::to_string(op.size) + " components");
    }
  }
  DenckerSpec adjoint;
  if (slash_fibre) adjoint = make_dencker(dirac_adjoint_operator(spec, mass), mode);
  auto fo = flow_options(r);
  auto seeds = starts(r, spec);
  double t0 = r.cfg.number("command", "tau0", 0.0), t1 = r.cfg.number("command", "tau1", 10.0);
  int steps = r.cfg.integer("command", "steps", 100);

  batch<PolarizedStrip>(
      r, seeds.size(),
      [&](size_t i) {
        auto strip = integrate_bicharacteristic(spec, seeds[i], t0, t1, steps, fo);
        if (slash_fibre) {
          auto gs = gamma_curved(metric_at(spec, seeds[i].x, CacheLevel::Metric));
          return hamilton_orbit_bispinor(dencker, adjoint, strip, slash(gs, seeds[i].xi), fo);
        }
        VecXc w0;
        if (!re.empty()) {
          w0.resize(re.size());
          for (size_t k = 0; k < re.size(); ++k) w0[k] = cplx(re[k], im[k]);
        } else {
          w0 = default_fibre(op, seeds[i]);
        }
        return hamilton_orbit(dencker, strip, w0, fo);
      },
      [&](size_t i, const PolarizedStrip& p) {
        std::ostringstream os;
        if (r.format == "json") os << dump_json(to_json(p));
        else write_strip_csv(os, p);
        r.write(batch_name(i, seeds.size(), "transport", r.format), os.str());
      });
  r.out << "transport: " << seeds.size() << " polarized strip(s) written to " << r.opt.out_dir << "\n";
}

std::vector<std::pair<Vec4, Vec4>> pairs_from(const Run& r) {
  std::vector<std::pair<Vec4, Vec4>> pairs;
  if (r.cfg.has("command", "pairs")) {
    auto rows = r.cfg.rows("command", "pairs");
    for (const auto& row : rows) {
      if (row.size() != 8) r.cfg.fail_at(r.cfg.value("command", "pairs"), "each pair needs 8 numbers (x then y)");
      pairs.push_back({Vec4(row[0], row[1], row[2], row[3]), Vec4(row[4], row[5], row[6], row[7])});
    }
  } else {
    pairs.push_back({r.cfg.vec4("command", "x"), r.cfg.vec4("command", "y")});
  }
  return pairs;
}

void cmd_predict(Run& r, const MetricSpec& spec) {
  r.cfg.allow_only("command", {"name", "kind", "x", "y", "pairs", "directions", "angular_tolerance", "transport_steps"});
  std::string kind = r.cfg.string("command", "kind", "hadamard-scalar");
  if (kind != "hadamard-scalar" && kind != "hadamard-dirac" && kind != "feynman")
    r.cfg.fail_at(r.cfg.value("command", "kind"), "kind must be hadamard-scalar, hadamard-dirac or feynman");
  PredictOptions po;
  po.directions = r.cfg.integer("command", "directions", po.directions);
  po.angular_tolerance = r.cfg.number("command", "angular_tolerance", po.angular_tolerance) * r.opt.tolerance_scale;
  po.transport_steps = r.cfg.integer("command", "transport_steps", po.transport_steps);
  po.bvp.tolerance = r.scaled("bvp", po.bvp.tolerance);
  auto pairs = pairs_from(r);

  std::vector<Json> records(pairs.size());
  batch<Json>(
      r, pairs.size(),
      [&](size_t i) {
        const auto& [x, y] = pairs[i];
        Json j;
        j["x"] = {x[0], x[1], x[2], x[3]};
        j["y"] = {y[0], y[1], y[2], y[3]};
        Json el = Json::array();
        if (kind == "hadamard-dirac") {
          auto p = predict_pol_dirac(spec, x, y, po);
          for (const auto& e : p.elements) el.push_back(to_json(e));
          j["complete"] = p.complete;
          j["note"] = p.note;
        } else {
          auto p = kind == "feynman" ? predict_wf_feynman(spec, x, y, po) : predict_wf_hadamard_scalar(spec, x, y, po);
          for (const auto& e : p.elements) el.push_back(to_json(e));
          j["complete"] = p.complete;
          j["note"] = p.note;
        }
        j["elements"] = el;
        return j;
      },
      [&](size_t i, const Json& j) { records[i] = j; });

  std::ostringstream os;
  size_t total = 0;
  if (r.format == "csv") {
    os << "pair,x0,x1,x2,x3,y0,y1,y2,y3,xi0,xi1,xi2,xi3,eta0,eta1,eta2,eta3,frequency_flag,diagonal\n";
    for (size_t i = 0; i < records.size(); ++i)
      for (const auto& e : records[i]["elements"]) {
        os << i;
        for (const char* key : {"x", "y", "xi", "eta"})
          for (int m = 0; m < 4; ++m) os << ',' << format_double(e[key][m].get<double>());
        os << ',' << (e["frequency_flag"].get<bool>() ? 1 : 0) << ',' << (e["diagonal"].get<bool>() ? 1 : 0) << '\n';
        ++total;
      }
  } else {
    Json j;
    j["command"] = "predict";
    j["kind"] = kind;
    j["metric"] = spec.name();
    j["pairs"] = records;
    for (const auto& rec : records) total += rec["elements"].size();
    os << dump_json(j);
  }
  r.write("predict." + r.format, os.str());
  r.out << "predict: " << total << " element(s) for " << pairs.size() << " pair(s)\n";
}

DetectorConfig detector_from(const Run& r) {
  DetectorConfig d;
  const auto& c = r.cfg;
  std::string w = c.string("command", "window", "gaussian");
  if (w == "gaussian") d.window = WindowKind::Gaussian;
  else if (w == "bump") d.window = WindowKind::Bump;
  else c.fail_at(c.value("command", "window"), "window must be gaussian or bump");
  d.width = c.number("command", "width", d.width);
  d.width_factor = c.number("command", "width_factor", d.width_factor);
  d.sectors = c.integer("command", "sectors", d.sectors);
  d.subdirections = c.integer("command", "subdirections", d.subdirections);
  d.k_max = c.number("command", "k_max", d.k_max);
  d.k_ratio = c.number("command", "k_ratio", d.k_ratio);
  d.radial_samples = c.integer("command", "radial_samples", d.radial_samples);
  d.slope_threshold = c.number("command", "slope_threshold", d.slope_threshold);
  d.residual_threshold = c.number("command", "residual_threshold", d.residual_threshold);
  d.floor = c.number("command", "floor", d.floor);
  d.threads = r.jobs;
  try {
    d.validate();
  } catch (const Error& e) {
    throw ConfigParseError(e.what(), c.section("command").line, c.section("command").column);
  }
  return d;
}

void cmd_detect(Run& r) {
  const auto& c = r.cfg;
  c.allow_only("command", {"name", "sample", "input", "dim", "origin", "spacing", "count", "eps", "cell_average",
                           "bases", "pairs", "polarization", "window", "width", "width_factor", "sectors",
                           "subdirections", "k_max", "k_ratio", "radial_samples", "slope_threshold",
                           "residual_threshold", "floor"});
  DetectorConfig d = detector_from(r);
  Sample s;
  if (c.has("command", "input")) {
    s = read_sample_csv_file(c.string("command", "input"));
    s.eps = c.number("command", "eps", 0.0);
  } else {
    std::string name = c.string("command", "sample");
    GridSpec g;
    g.dim = c.integer("command", "dim", 1);
    if (g.dim != 1 && g.dim != 2) c.fail_at(c.value("command", "dim"), "dim must be 1 or 2");
    auto o = c.numbers("command", "origin"), h = c.numbers("command", "spacing"), n = c.numbers("command", "count");
    if (static_cast<int>(o.size()) != g.dim || h.size() != o.size() || n.size() != o.size())
      c.fail_at(c.value("command", "origin"), "origin, spacing and count need " + std::to_string(g.dim) + " entries");
    for (int a = 0; a < g.dim; ++a) {
      g.origin[a] = o[a];
      g.spacing[a] = h[a];
      g.count[a] = static_cast<int>(n[a]);
    }
    SampleOptions so;
    so.cell_average = c.boolean("command", "cell_average", false);
    try {
      s = sample_examples(name, g, c.number("command", "eps"), so);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotRecognized) c.fail_at(c.value("command", "sample"), e.what());
      throw;
    }
  }

  Json j;
  j["command"] = "detect";
  j["sample"] = s.name;
  WFReport rep;
  bool pol = c.boolean("command", "polarization", false);
  if (c.has("command", "pairs")) {
    rep = wf_detect_two_point(s, d, pairs_from(r));
  } else {
    std::vector<std::array<double, 2>> bases;
    for (const auto& b : c.rows("command", "bases")) {
      if (static_cast<int>(b.size()) != s.grid.dim)
        c.fail_at(c.value("command", "bases"), "each base point needs " + std::to_string(s.grid.dim) + " coordinates");
      bases.push_back({b[0], s.grid.dim == 2 ? b[1] : 0.0});
    }
    if (pol) {
      Json pe = Json::array();
      for (const auto& e : pol_detect(s, d, bases)) pe.push_back(to_json(e));
      j["polarization"] = pe;
    }
    rep = wf_detect(s, d, bases);
  }
  j["report"] = to_json(rep);
  std::ostringstream os;
  if (r.format == "csv") write_detect_csv(os, rep);
  else os << dump_json(j);
  r.write("detect." + r.format, os.str());
  r.out << "detect: " << rep.count(Verdict::Singular) << " singular, " << rep.count(Verdict::Regular) << " regular, "
        << rep.count(Verdict::Inconclusive) << " inconclusive\n";
}

MetricSpec metric_by_name(const std::string& n) {
  if (n == "minkowski") return MetricSpec::minkowski();
  if (n == "schwarzschild") return MetricSpec::schwarzschild(1.0);
  if (n == "frw-power") return MetricSpec::frw_power(1.0, 0.5);
  if (n == "frw-exponential") return MetricSpec::frw_exponential(1.0, 0.5);
  throw Error(ErrorCode::NotRecognized, "unknown metric '" + n + "'");
}

int cmd_verify(Run& r) {
  const auto& c = r.cfg;
  c.allow_only("command", {"name", "checks", "metrics", "seed"});
  VerifyOptions vo;
  vo.checks = !r.opt.checks.empty() ? r.opt.checks
                                    : (c.has("command", "checks") ? c.strings("command", "checks") : std::vector<std::string>{});
  if (c.has("command", "metrics")) {
    vo.metrics.clear();
    for (const auto& n : c.strings("command", "metrics")) {
      try {
        vo.metrics.push_back(metric_by_name(n));
      } catch (const Error& e) {
        c.fail_at(c.value("command", "metrics"), e.what());
      }
    }
  } else if (c.has_section("metric")) {
    vo.metrics = {metric_from_config(c)};
  }
  vo.seed = static_cast<unsigned>(c.integer("command", "seed", static_cast<int>(vo.seed)));
  vo.tolerance_scale = r.opt.tolerance_scale;
  vo.jobs = r.jobs;
  if (c.has_section("tolerance"))
    for (const auto& key : c.section("tolerance").order) {
      bool is_check = false;
      for (const auto& n : verify_check_names()) is_check = is_check || n == key;
      if (is_check) vo.tolerances[key] = c.number("tolerance", key);
    }
  for (const auto& name : vo.checks) {
    bool ok = false;
    for (const auto& n : verify_check_names()) ok = ok || n == name;
    if (!ok) throw Error(ErrorCode::ConfigError, "unknown check '" + name + "'");
  }
  auto results = run_verify(vo);
  bool all = true;
  Json recs = Json::array();
  std::ostringstream csv;
  csv << "check,metric,max_residual,tolerance,samples,pass\n";
  for (const auto& res : results) {
    all = all && res.pass;
    Json j;
    j["check"] = res.check;
    j["metric"] = res.metric;
    j["max_residual"] = std::isfinite(res.max_residual) ? Json(res.max_residual) : Json(nullptr);
    j["tolerance"] = res.tolerance;
    j["samples"] = res.samples;
    j["pass"] = res.pass;
    j["detail"] = res.detail;
    recs.push_back(j);
    csv << res.check << ",\"" << res.metric << "\"," << format_double(res.max_residual) << ','
        << format_double(res.tolerance) << ',' << res.samples << ',' << (res.pass ? "PASS" : "FAIL") << '\n';
    char line[256];
    std::snprintf(line, sizeof line, "%s  %-18s %-28s max residual %.3e  tolerance %.1e", res.pass ? "PASS" : "FAIL",
                  res.check.c_str(), res.metric.c_str(), res.max_residual, res.tolerance);
    r.out << line << (res.detail.empty() ? "" : "  (" + res.detail + ")") << "\n";
  }
  Json j;
  j["command"] = "verify";
  j["results"] = recs;
  j["pass"] = all;
  r.write("verify." + r.format, r.format == "csv" ? csv.str() : dump_json(j));
  return all ? kExitOk : kExitCheckFailed;
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

Json error_record(const std::exception& e, int code) {
  Json j;
  j["exit_code"] = code;
  j["message"] = e.what();
  if (const auto* me = dynamic_cast<const Error*>(&e)) j["code"] = to_string(me->code());
  else j["code"] = "Internal";
  if (const auto* ce = dynamic_cast<const ConfigParseError*>(&e)) {
    j["line"] = ce->line();
    j["column"] = ce->column();
  }
  Json out;
  out["error"] = j;
  return out;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SolverDiverged:
    case ErrorCode::NotInNormalNeighbourhood:
    case ErrorCode::LeftDomain:
    case ErrorCode::KernelViolation:
      return kExitNonConvergence;
    default:
      return kExitUsage;
  }
}

MetricSpec metric_from_config(const Config& cfg) {
  const std::string s = "metric";
  std::string name = cfg.string(s, "name");
  try {
    if (name == "minkowski") {
      cfg.allow_only(s, {"name"});
      return MetricSpec::minkowski();
    }
    if (name == "schwarzschild") {
      cfg.allow_only(s, {"name", "mass"});
      double m = cfg.number(s, "mass", 1.0);
      if (!(m > 0)) cfg.fail_at(cfg.value(s, "mass"), "mass must be positive");
      return MetricSpec::schwarzschild(m);
    }
    if (name == "frw-power") {
      cfg.allow_only(s, {"name", "a0", "exponent"});
      return MetricSpec::frw_power(cfg.number(s, "a0", 1.0), cfg.number(s, "exponent"));
    }
    if (name == "frw-exponential") {
      cfg.allow_only(s, {"name", "a0", "hubble"});
      return MetricSpec::frw_exponential(cfg.number(s, "a0", 1.0), cfg.number(s, "hubble"));
    }
    if (name == "custom") {
      std::map<std::string, std::string> comps;
      std::map<std::string, double> consts;
      std::vector<std::string> allowed{"name", "coordinates"};
      for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) allowed.push_back("g" + std::to_string(i) + std::to_string(j));
      for (const auto& key : cfg.section(s).order) {
        if (key.rfind("g", 0) == 0 && key.size() == 3 && key != "g") {
          comps[key.substr(1)] = cfg.string(s, key);
        } else if (key.rfind("const.", 0) == 0) {
          consts[key.substr(6)] = cfg.number(s, key);
          allowed.push_back(key);
        }
      }
      cfg.allow_only(s, allowed);
      return MetricSpec::custom(cfg.strings(s, "coordinates"), comps, consts);
    }
  } catch (const ConfigParseError&) {
    throw;
  } catch (const Error& e) {
    cfg.fail_at(cfg.value(s, "name"), e.what());
  }
  cfg.fail_at(cfg.value(s, "name"), "unknown metric '" + name + "'");
}

int run_command(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  auto start = std::chrono::steady_clock::now();
  std::string started = utc_now();
  int code = kExitOk;
  std::string command;
  std::vector<std::string> files;
  int jobs = opt.jobs > 0 ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());
  try {
    if (!(opt.tolerance_scale > 0) || !std::isfinite(opt.tolerance_scale))
      throw Error(ErrorCode::ConfigError, "MICROLOC_TOLERANCE_SCALE must be a positive number");
    Config cfg = load_config(opt.config_path);
    for (const auto& sname : cfg.section_names())
      if (sname != "metric" && sname != "command" && sname != "output" && sname != "tolerance") {
        const auto& sec = cfg.section(sname);
        throw ConfigParseError("unknown section [" + sname + "]", sec.line, sec.column);
      }
    command = cfg.string("command", "name");
    cfg.allow_only("output", {"format"});
    if (cfg.has_section("tolerance"))
      for (const auto& key : cfg.section("tolerance").order) {
        double v = cfg.number("tolerance", key);
        if (!(v > 0)) cfg.fail_at(cfg.value("tolerance", key), "tolerances must be positive");
      }
    Run r{opt, cfg, out, "", jobs, {}};
    std::string fmt_default = (command == "propagate" || command == "transport") ? "csv" : "json";
    r.format = !opt.format.empty() ? opt.format : cfg.string("output", "format", fmt_default);
    if (r.format != "csv" && r.format != "json")
      throw Error(ErrorCode::ConfigError, "format must be csv or json, not '" + r.format + "'");
    fs::create_directories(opt.out_dir);

    auto need_metric = [&] { return metric_from_config(cfg); };
    if (command == "propagate") cmd_propagate(r, need_metric());
    else if (command == "transport") cmd_transport(r, need_metric());
    else if (command == "predict") cmd_predict(r, need_metric());
    else if (command == "detect") cmd_detect(r);
    else if (command == "verify") code = cmd_verify(r);
    else cfg.fail_at(cfg.value("command", "name"), "unknown command '" + command + "'");
    files = r.files;
  } catch (const Error& e) {
    code = exit_code_for(e.code());
    err << error_record(e, code).dump() << std::endl;
  } catch (const fs::filesystem_error& e) {
    code = kExitUsage;
    err << error_record(e, code).dump() << std::endl;
  } catch (const std::exception& e) {
    code = kExitNonConvergence;
    err << error_record(e, code).dump() << std::endl;
  }

  // run metadata lives in a sidecar so data files stay byte-identical
  std::error_code ec;
  if (fs::is_directory(opt.out_dir, ec)) {
    Json meta;
    meta["version"] = kVersion;
    meta["command"] = command;
    meta["config"] = opt.config_path;
    meta["started_utc"] = started;
    meta["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    meta["jobs"] = jobs;
    meta["tolerance_scale"] = opt.tolerance_scale;
    meta["files"] = files;
    meta["exit_code"] = code;
    std::ofstream f(fs::path(opt.out_dir) / "run_meta.json", std::ios::binary);
    if (f) f << dump_json(meta);
  }
  return code;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"microloc: microlocal propagation, prediction and detection"};
  CliOptions opt;
  std::string checks;
  app.add_option("--config", opt.config_path, "run configuration")->required();
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--jobs", opt.jobs, "worker threads (default: number of processors)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed-list", opt.seed_list, "initial phase points for batch propagation");
  app.add_option("--checks", checks, "comma separated verify checks");
  app.add_option("--format", opt.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.set_version_flag("--version", kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    Json j;
    j["error"] = {{"code", "UsageError"}, {"message", e.what()}, {"exit_code", kExitUsage}};
    std::cerr << j.dump() << std::endl;
    return kExitUsage;
  }
  std::stringstream ss(checks);
  for (std::string c; std::getline(ss, c, ',');)
    if (!c.empty()) opt.checks.push_back(c);
  if (const char* s = std::getenv("MICROLOC_TOLERANCE_SCALE")) {
    char* end = nullptr;
    opt.tolerance_scale = std::strtod(s, &end);
    if (end == s || *end != '\0') opt.tolerance_scale = std::nan("");
  }
  return run_command(opt, std::cout, std::cerr);
}

}  // namespace microloc
