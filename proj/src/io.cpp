#include "microloc/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "microloc/error.hpp"

namespace microloc {

namespace {

Json vec(const Vec4& v) { return Json::array({v[0], v[1], v[2], v[3]}); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field(const std::string& s, size_t row) {
  char* end = nullptr;
  double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw Error(ErrorCode::ConfigError, "row " + std::to_string(row) + ": malformed number '" + s + "'");
  return d;
}

// header names plus numeric rows
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ConfigError, "empty CSV input");
  t.header = split(line);
  size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = split(line);
    if (f.size() != t.header.size())
      throw Error(ErrorCode::ConfigError, "row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                                              " fields, header has " + std::to_string(t.header.size()));
    std::vector<double> r;
    for (const auto& s : f) r.push_back(parse_field(s, row));
    t.rows.push_back(std::move(r));
  }
  return t;
}

// distinct values of a uniformly spaced axis, in order of appearance
void axis(const std::vector<double>& v, double& origin, double& spacing, int& count) {
  std::vector<double> u;
  for (double x : v)
    if (u.empty() || x != u.back()) {
      bool seen = false;
      for (double y : u) seen = seen || y == x;
      if (seen) break;
      u.push_back(x);
    }
  origin = u.front();
  count = static_cast<int>(u.size());
  spacing = count > 1 ? (u.back() - u.front()) / (count - 1) : 1.0;
  for (int i = 0; i < count; ++i)
    if (std::abs(u[i] - (origin + i * spacing)) > 1e-9 * std::max(1.0, std::abs(spacing) * count))
      throw Error(ErrorCode::ConfigError, "grid coordinates are not uniformly spaced");
  if (count > 1 && !(spacing > 0)) throw Error(ErrorCode::ConfigError, "grid coordinates must increase");
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string strip_csv_header(size_t n) {
  std::string h = "tau,x0,x1,x2,x3,xi0,xi1,xi2,xi3,q";
  for (size_t k = 0; k < n; ++k) h += ",w" + std::to_string(k) + "_re,w" + std::to_string(k) + "_im";
  return h;
}

static void strip_rows(std::ostream& os, const BicharStrip& s, const std::vector<VecXc>* fibre) {
  for (size_t i = 0; i < s.size(); ++i) {
    std::string line = format_double(s.tau[i]);
    for (int m = 0; m < 4; ++m) line += "," + format_double(s.points[i].x[m]);
    for (int m = 0; m < 4; ++m) line += "," + format_double(s.points[i].xi[m]);
    line += "," + format_double(s.q[i]);
    if (fibre)
      for (Eigen::Index k = 0; k < (*fibre)[i].size(); ++k)
        line += "," + format_double((*fibre)[i][k].real()) + "," + format_double((*fibre)[i][k].imag());
    os << line << '\n';
  }
}

void write_strip_csv(std::ostream& os, const BicharStrip& strip) {
  os << strip_csv_header(0) << '\n';
  strip_rows(os, strip, nullptr);
}

void write_strip_csv(std::ostream& os, const PolarizedStrip& p) {
  size_t n = p.fibre.empty() ? 0 : static_cast<size_t>(p.fibre[0].size());
  os << strip_csv_header(n) << '\n';
  strip_rows(os, p.strip, &p.fibre);
}

Json to_json(const BicharStrip& s) {
  Json j;
  j["metric"] = s.metric.name();
  j["hamiltonian"] = s.hamiltonian;
  j["tau"] = s.tau;
  j["q"] = s.q;
  Json x = Json::array(), xi = Json::array();
  for (const auto& p : s.points) {
    x.push_back(vec(p.x));
    xi.push_back(vec(p.xi));
  }
  j["x"] = x;
  j["xi"] = xi;
  j["max_drift"] = s.max_drift();
  return j;
}

Json to_json(const PolarizedStrip& p) {
  Json j = to_json(p.strip);
  const char* kinds[] = {"vector", "spinor", "cospinor", "bispinor"};
  j["fibre_kind"] = kinds[static_cast<int>(p.kind)];
  Json re = Json::array(), im = Json::array();
  for (const auto& w : p.fibre) {
    Json r = Json::array(), i = Json::array();
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      r.push_back(w[k].real());
      i.push_back(w[k].imag());
    }
    re.push_back(r);
    im.push_back(i);
  }
  j["fibre_re"] = re;
  j["fibre_im"] = im;
  return j;
}

Json to_json(const WFElement& e) {
  Json j;
  j["x"] = vec(e.x);
  j["y"] = vec(e.y);
  j["xi"] = vec(e.xi);
  j["eta"] = vec(e.eta);
  j["frequency_flag"] = e.frequency_flag;
  j["diagonal"] = e.diagonal;
  j["diagnostics"] = e.diagnostics;
  j["fibre_re"] = Json::array();
  j["fibre_im"] = Json::array();
  return j;
}

Json to_json(const PolElement& e) {
  Json j = to_json(e.wf);
  Json re = Json::array(), im = Json::array();
  VecXc f = flatten(e.fibre);
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    re.push_back(f[k].real());
    im.push_back(f[k].imag());
  }
  j["fibre_re"] = re;
  j["fibre_im"] = im;
  return j;
}

Json to_json(const WFEntry& e) {
  Json j;
  j["base"] = {e.base[0], e.base[1]};
  j["sector"] = e.sector;
  j["angle"] = e.angle;
  j["direction"] = {e.direction[0], e.direction[1]};
  j["slope"] = e.slope;
  j["residual"] = e.residual;
  j["upper_slope"] = e.upper_slope;
  j["peak"] = e.peak;
  j["floor"] = e.floor;
  j["verdict"] = to_string(e.verdict);
  j["k"] = e.k;
  j["magnitude"] = e.magnitude;
  if (e.two_point) {
    j["x"] = vec(e.x);
    j["y"] = vec(e.y);
    j["xi"] = vec(e.xi);
    j["eta"] = vec(e.eta);
    j["frequency_flag"] = e.xi[0] > 0;
  }
  return j;
}

Json to_json(const PolEntry& e) {
  Json j = to_json(e.wf);
  Json re = Json::array(), im = Json::array();
  for (const auto& c : e.fibre) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  j["fibre_re"] = re;
  j["fibre_im"] = im;
  j["dominance"] = std::isfinite(e.dominance) ? Json(e.dominance) : Json(nullptr);
  return j;
}

Json to_json(const DetectorConfig& c) {
  Json j;
  j["window"] = to_string(c.window);
  j["width"] = c.width;
  j["width_factor"] = c.width_factor;
  j["sectors"] = c.sectors;
  j["subdirections"] = c.subdirections;
  j["k_max"] = c.k_max;
  j["k_ratio"] = c.k_ratio;
  j["radial_samples"] = c.radial_samples;
  j["slope_threshold"] = c.slope_threshold;
  j["residual_threshold"] = c.residual_threshold;
  j["floor"] = c.floor;
  return j;
}

Json to_json(const WFReport& r) {
  Json j;
  j["config"] = to_json(r.config);
  j["k_max"] = r.k_max;
  j["width"] = r.width;
  Json e = Json::array();
  for (const auto& x : r.entries) e.push_back(to_json(x));
  j["entries"] = e;
  j["singular"] = r.count(Verdict::Singular);
  j["regular"] = r.count(Verdict::Regular);
  j["inconclusive"] = r.count(Verdict::Inconclusive);
  return j;
}

void write_sample_csv(std::ostream& os, const Sample& s) {
  std::string h = s.grid.dim == 2 ? "x0,x1" : "x0";
  for (int c = 0; c < s.components; ++c) h += ",c" + std::to_string(c) + "_re,c" + std::to_string(c) + "_im";
  os << h << '\n';
  const int n1 = s.grid.dim == 2 ? s.grid.count[1] : 1;
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i0 = 0; i0 < s.grid.count[0]; ++i0) {
      auto p = s.grid.point(i0, i1);
      std::string line = format_double(p[0]);
      if (s.grid.dim == 2) line += "," + format_double(p[1]);
      for (int c = 0; c < s.components; ++c)
        line += "," + format_double(s.at(i0, i1, c).real()) + "," + format_double(s.at(i0, i1, c).imag());
      os << line << '\n';
    }
}

Sample read_sample_csv(std::istream& is, const std::string& name) {
  Table t = read_table(is);
  if (t.header.empty() || t.header[0] != "x0") throw Error(ErrorCode::ConfigError, "sample CSV must start with x0");
  const int dim = t.header.size() > 1 && t.header[1] == "x1" ? 2 : 1;
  const int extra = static_cast<int>(t.header.size()) - dim;
  if (extra <= 0 || extra % 2) throw Error(ErrorCode::ConfigError, "sample CSV needs re/im column pairs");
  if (t.rows.empty()) throw Error(ErrorCode::ConfigError, "sample CSV has no rows");
  Sample s;
  s.name = name;
  s.components = extra / 2;
  s.grid.dim = dim;
  std::vector<double> c0, c1;
  for (const auto& r : t.rows) {
    c0.push_back(r[0]);
    if (dim == 2) c1.push_back(r[1]);
  }
  axis(c0, s.grid.origin[0], s.grid.spacing[0], s.grid.count[0]);
  if (dim == 2) {
    std::vector<double> slow;
    for (size_t i = 0; i < c1.size(); i += s.grid.count[0]) slow.push_back(c1[i]);
    axis(slow, s.grid.origin[1], s.grid.spacing[1], s.grid.count[1]);
  }
  if (t.rows.size() != s.grid.size())
    throw Error(ErrorCode::ConfigError, "sample CSV rows do not fill a " + std::to_string(s.grid.count[0]) + "x" +
                                            std::to_string(s.grid.count[1]) + " grid");
  s.values.resize(s.grid.size() * s.components);
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const int i0 = static_cast<int>(i % s.grid.count[0]), i1 = static_cast<int>(i / s.grid.count[0]);
    auto p = s.grid.point(i0, i1);
    double tol = 1e-9 * std::max(1.0, std::abs(p[0]));
    if (std::abs(t.rows[i][0] - p[0]) > tol || (dim == 2 && std::abs(t.rows[i][1] - p[1]) > 1e-9 * std::max(1.0, std::abs(p[1]))))
      throw Error(ErrorCode::ConfigError, "row " + std::to_string(i + 2) + " is out of grid order");
    for (int c = 0; c < s.components; ++c) s.at(i0, i1, c) = cplx(t.rows[i][dim + 2 * c], t.rows[i][dim + 2 * c + 1]);
  }
  return s;
}

Sample read_sample_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read sample file '" + path + "'");
  return read_sample_csv(in, path);
}

void write_detect_csv(std::ostream& os, const WFReport& r) {
  os << "base0,base1,sector,angle,slope,residual,upper_slope,verdict\n";
  for (const auto& e : r.entries)
    os << format_double(e.base[0]) << ',' << format_double(e.base[1]) << ',' << e.sector << ','
       << format_double(e.angle) << ',' << format_double(e.slope) << ',' << format_double(e.residual) << ','
       << format_double(e.upper_slope) << ',' << to_string(e.verdict) << '\n';
}

void write_spinor_field_csv(std::ostream& os, const SpinorField& f) {
  os << "x0,x1,x2,x3,s0_re,s0_im,s1_re,s1_im,s2_re,s2_im,s3_re,s3_im\n";
  for (int a = 0; a < f.counts[0]; ++a)
    for (int b = 0; b < f.counts[1]; ++b)
      for (int c = 0; c < f.counts[2]; ++c)
        for (int d = 0; d < f.counts[3]; ++d) {
          Vec4 p = f.point(a, b, c, d);
          const Vec4c& v = f.values[f.index(a, b, c, d)];
          std::string line = format_double(p[0]);
          for (int m = 1; m < 4; ++m) line += "," + format_double(p[m]);
          for (int m = 0; m < 4; ++m) line += "," + format_double(v[m].real()) + "," + format_double(v[m].imag());
          os << line << '\n';
        }
}

SpinorField read_spinor_field_csv(std::istream& is) {
  Table t = read_table(is);
  if (t.header.size() != 12 || t.header[0] != "x0") throw Error(ErrorCode::ConfigError, "spinor CSV needs 12 columns");
  if (t.rows.empty()) throw Error(ErrorCode::ConfigError, "spinor CSV has no rows");
  SpinorField f;
  // x3 varies fastest: recover each axis from strided columns
  size_t stride = 1;
  for (int m = 3; m >= 0; --m) {
    std::vector<double> col;
    for (size_t i = 0; i < t.rows.size(); i += stride) col.push_back(t.rows[i][m]);
    double o, h;
    int n;
    axis(col, o, h, n);
    f.origin[m] = o;
    f.spacing[m] = h;
    f.counts[m] = n;
    stride *= n;
  }
  if (stride != t.rows.size()) throw Error(ErrorCode::ConfigError, "spinor CSV rows do not fill a grid");
  f.values.resize(t.rows.size());
  for (size_t i = 0; i < t.rows.size(); ++i)
    for (int m = 0; m < 4; ++m) f.values[i][m] = cplx(t.rows[i][4 + 2 * m], t.rows[i][5 + 2 * m]);
  return f;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace microloc
