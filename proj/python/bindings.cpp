#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "microloc/cli.hpp"
#include "microloc/flow.hpp"
#include "microloc/hadamard.hpp"
#include "microloc/io.hpp"
#include "microloc/spin.hpp"
#include "microloc/symbols.hpp"
#include "microloc/verify.hpp"
#include "microloc/wfdetect.hpp"

namespace py = pybind11;
using namespace microloc;

namespace {

py::object to_py(const Json& j) {
  switch (j.type()) {
    case Json::value_t::null: return py::none();
    case Json::value_t::boolean: return py::bool_(j.get<bool>());
    case Json::value_t::number_integer: return py::int_(j.get<long long>());
    case Json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
    case Json::value_t::number_float: return py::float_(j.get<double>());
    case Json::value_t::string: return py::str(j.get<std::string>());
    case Json::value_t::array: {
      py::list l;
      for (const auto& v : j) l.append(to_py(v));
      return std::move(l);
    }
    default: {
      py::dict d;
      for (auto it = j.begin(); it != j.end(); ++it) d[py::str(it.key())] = to_py(it.value());
      return std::move(d);
    }
  }
}

py::dict strip_arrays(const BicharStrip& s) {
  const auto n = static_cast<py::ssize_t>(s.size());
  py::array_t<double> tau(n), q(n), x({n, py::ssize_t(4)}), xi({n, py::ssize_t(4)});
  auto t = tau.mutable_unchecked<1>(), qq = q.mutable_unchecked<1>();
  auto xx = x.mutable_unchecked<2>(), xs = xi.mutable_unchecked<2>();
  for (py::ssize_t k = 0; k < n; ++k) {
    t(k) = s.tau[k];
    qq(k) = s.q[k];
    for (int m = 0; m < 4; ++m) {
      xx(k, m) = s.points[k].x[m];
      xs(k, m) = s.points[k].xi[m];
    }
  }
  py::dict d;
  d["tau"] = tau;
  d["x"] = x;
  d["xi"] = xi;
  d["q"] = q;
  d["max_drift"] = s.max_drift();
  return d;
}

Sample make_sample(const std::string& name, int dim, std::vector<double> origin, std::vector<double> spacing,
                   std::vector<int> count, double eps, bool cell_average) {
  if (static_cast<int>(origin.size()) != dim || spacing.size() != origin.size() || count.size() != origin.size())
    throw Error(ErrorCode::InvalidArgument, "origin, spacing and count need dim entries");
  GridSpec g;
  g.dim = dim;
  for (int a = 0; a < dim; ++a) {
    g.origin[a] = origin[a];
    g.spacing[a] = spacing[a];
    g.count[a] = count[a];
  }
  return sample_examples(name, g, eps, {cell_average});
}

DetectorConfig detector(const py::dict& kw) {
  DetectorConfig c;
  for (auto item : kw) {
    auto key = item.first.cast<std::string>();
    auto v = item.second;
    if (key == "window") c.window = v.cast<std::string>() == "bump" ? WindowKind::Bump : WindowKind::Gaussian;
    else if (key == "width") c.width = v.cast<double>();
    else if (key == "width_factor") c.width_factor = v.cast<double>();
    else if (key == "sectors") c.sectors = v.cast<int>();
    else if (key == "subdirections") c.subdirections = v.cast<int>();
    else if (key == "k_max") c.k_max = v.cast<double>();
    else if (key == "k_ratio") c.k_ratio = v.cast<double>();
    else if (key == "radial_samples") c.radial_samples = v.cast<int>();
    else if (key == "slope_threshold") c.slope_threshold = v.cast<double>();
    else if (key == "residual_threshold") c.residual_threshold = v.cast<double>();
    else if (key == "floor") c.floor = v.cast<double>();
    else if (key == "threads") c.threads = v.cast<int>();
    else throw Error(ErrorCode::InvalidArgument, "unknown detector option '" + key + "'");
  }
  c.validate();
  return c;
}

std::vector<std::array<double, 2>> base_points(const std::vector<std::vector<double>>& bases) {
  std::vector<std::array<double, 2>> out;
  for (const auto& b : bases) {
    if (b.empty() || b.size() > 2) throw Error(ErrorCode::InvalidArgument, "base points need 1 or 2 coordinates");
    out.push_back({b[0], b.size() == 2 ? b[1] : 0.0});
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "microlocal propagation, prediction and detection";

  static py::exception<Error> err(m, "MicrolocError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(err.ptr())(py::str(e.what()));
      inst.attr("code") = to_string(e.code());
      PyErr_SetObject(err.ptr(), inst.ptr());
    }
  });

  py::class_<MetricSpec>(m, "Metric")
      .def_static("minkowski", &MetricSpec::minkowski)
      .def_static("schwarzschild", &MetricSpec::schwarzschild, py::arg("mass"))
      .def_static("frw_power", &MetricSpec::frw_power, py::arg("a0"), py::arg("exponent"))
      .def_static("frw_exponential", &MetricSpec::frw_exponential, py::arg("a0"), py::arg("hubble"))
      .def_static("custom", &MetricSpec::custom, py::arg("coordinates"), py::arg("components"),
                  py::arg("constants") = std::map<std::string, double>{})
      .def_property_readonly("name", &MetricSpec::name)
      .def("in_domain", &MetricSpec::in_domain)
      .def("__repr__", [](const MetricSpec& s) { return "<Metric " + s.name() + ">"; });

  m.def(
      "metric_at",
      [](const MetricSpec& s, const Vec4& x) {
        auto c = metric_at(s, x);
        py::dict d;
        d["g"] = c.g;
        d["g_inv"] = c.g_inv;
        d["ricci"] = c.ricci;
        d["scalar_curvature"] = c.scalar_curvature;
        d["tetrad"] = c.tetrad;
        return d;
      },
      py::arg("metric"), py::arg("x"));

  m.def(
      "gammas",
      [](const MetricSpec& s, const Vec4& x) {
        auto gs = gamma_curved(metric_at(s, x, CacheLevel::Metric));
        return std::vector<Mat4c>(gs.upper.begin(), gs.upper.end());
      },
      py::arg("metric"), py::arg("x"));
  m.def(
      "anticommutator_residual",
      [](const MetricSpec& s, const Vec4& x) {
        auto c = metric_at(s, x, CacheLevel::Metric);
        return anticommutator_residual(gamma_curved(c), c.g_inv);
      },
      py::arg("metric"), py::arg("x"));
  m.def(
      "slash",
      [](const MetricSpec& s, const Vec4& x, const Vec4& xi) {
        return Mat4c(slash(gamma_curved(metric_at(s, x, CacheLevel::Metric)), xi));
      },
      py::arg("metric"), py::arg("x"), py::arg("xi"));
  m.def("nabla_gamma_residual", &nabla_gamma_residual, py::arg("metric"), py::arg("x"), py::arg("h"));

  m.def(
      "principal_symbol",
      [](const std::string& family, const MetricSpec& s, const Vec4& x, const Vec4& xi, double mass) {
        return principal_symbol(make_operator(family, s, mass), x, xi);
      },
      py::arg("family"), py::arg("metric"), py::arg("x"), py::arg("xi"), py::arg("mass") = 0.0);
  m.def(
      "rpt_residual",
      [](const std::string& family, const MetricSpec& s, double mass, int samples, unsigned seed) {
        return rpt_factorize(make_operator(family, s, mass), samples, seed, std::numeric_limits<double>::infinity())
            .max_residual;
      },
      py::arg("family"), py::arg("metric"), py::arg("mass") = 0.0, py::arg("samples") = 200,
      py::arg("seed") = 12345u);

  m.def(
      "null_covector",
      [](const MetricSpec& s, const Vec4& x, const Eigen::Vector3d& n) { return Vec4(null_covector(s, x, n)); },
      py::arg("metric"), py::arg("x"), py::arg("direction"));
  m.def(
      "propagate",
      [](const MetricSpec& s, const Vec4& x, const Vec4& xi, double tau0, double tau1, int steps) {
        py::gil_scoped_release nogil;
        auto strip = integrate_bicharacteristic(s, {x, xi}, tau0, tau1, steps);
        py::gil_scoped_acquire gil;
        return strip_arrays(strip);
      },
      py::arg("metric"), py::arg("x"), py::arg("xi"), py::arg("tau0") = 0.0, py::arg("tau1") = 10.0,
      py::arg("steps") = 100);
  m.def(
      "transport",
      [](const std::string& family, const MetricSpec& s, const Vec4& x, const Vec4& xi, const VecXc& w0,
         const std::string& mode, double mass, double tau1, int steps) {
        TransportMode tm = mode == "spin"          ? TransportMode::Spin
                           : mode == "levi-civita" ? TransportMode::LeviCivita
                           : mode == "generic"     ? TransportMode::Generic
                                                   : throw Error(ErrorCode::InvalidArgument, "unknown mode '" + mode + "'");
        auto strip = integrate_bicharacteristic(s, {x, xi}, 0.0, tau1, steps);
        auto orbit = hamilton_orbit(make_dencker(make_operator(family, s, mass), tm), strip, w0);
        py::dict d = strip_arrays(orbit.strip);
        MatXc w(orbit.fibre.size(), w0.size());
        for (size_t k = 0; k < orbit.fibre.size(); ++k) w.row(static_cast<Eigen::Index>(k)) = orbit.fibre[k].transpose();
        d["fibre"] = w;
        return d;
      },
      py::arg("family"), py::arg("metric"), py::arg("x"), py::arg("xi"), py::arg("w0"), py::arg("mode") = "generic",
      py::arg("mass") = 0.0, py::arg("tau1") = 1.0, py::arg("steps") = 100);

  m.def(
      "predict_wf",
      [](const MetricSpec& s, const Vec4& x, const Vec4& y, const std::string& kind, int directions) {
        PredictOptions o;
        o.directions = directions;
        auto p = kind == "feynman" ? predict_wf_feynman(s, x, y, o) : kind == "hadamard-scalar"
                                                                          ? predict_wf_hadamard_scalar(s, x, y, o)
                                                                          : throw Error(ErrorCode::InvalidArgument,
                                                                                        "unknown kind '" + kind + "'");
        py::list out;
        for (const auto& e : p.elements) out.append(to_py(to_json(e)));
        return out;
      },
      py::arg("metric"), py::arg("x"), py::arg("y"), py::arg("kind") = "hadamard-scalar", py::arg("directions") = 64);
  m.def(
      "predict_pol_dirac",
      [](const MetricSpec& s, const Vec4& x, const Vec4& y, int directions) {
        PredictOptions o;
        o.directions = directions;
        py::list out;
        for (const auto& e : predict_pol_dirac(s, x, y, o).elements) {
          py::dict d = to_py(to_json(e.wf));
          d["fibre"] = e.fibre;
          out.append(d);
        }
        return out;
      },
      py::arg("metric"), py::arg("x"), py::arg("y"), py::arg("directions") = 64);
  m.def(
      "product_admissible",
      [](const MetricSpec& s, const Vec4& x, const Vec4& y, const std::string& kind) {
        auto e = kind == "feynman" ? predict_wf_feynman(s, x, y).elements : predict_wf_hadamard_scalar(s, x, y).elements;
        return product_admissible(e, e).admissible;
      },
      py::arg("metric"), py::arg("x"), py::arg("y"), py::arg("kind") = "hadamard-scalar");

  m.def("sample_names", &sample_names);
  m.def(
      "sample",
      [](const std::string& name, int dim, std::vector<double> origin, std::vector<double> spacing,
         std::vector<int> count, double eps, bool cell_average) {
        auto s = make_sample(name, dim, origin, spacing, count, eps, cell_average);
        std::vector<py::ssize_t> shape;
        if (dim == 2) shape.push_back(s.grid.count[1]);
        shape.push_back(s.grid.count[0]);
        shape.push_back(s.components);
        py::array_t<cplx> a(shape);
        std::copy(s.values.begin(), s.values.end(), a.mutable_data());
        return a;
      },
      py::arg("name"), py::arg("dim"), py::arg("origin"), py::arg("spacing"), py::arg("count"), py::arg("eps"),
      py::arg("cell_average") = false);
  m.def(
      "wf_detect",
      [](const std::string& name, int dim, std::vector<double> origin, std::vector<double> spacing,
         std::vector<int> count, double eps, const std::vector<std::vector<double>>& bases, bool cell_average,
         const py::kwargs& kw) {
        auto s = make_sample(name, dim, origin, spacing, count, eps, cell_average);
        auto cfg = detector(kw);
        auto b = base_points(bases);
        WFReport rep;
        {
          py::gil_scoped_release nogil;
          rep = wf_detect(s, cfg, b);
        }
        return to_py(to_json(rep));
      },
      py::arg("name"), py::arg("dim"), py::arg("origin"), py::arg("spacing"), py::arg("count"), py::arg("eps"),
      py::arg("bases"), py::arg("cell_average") = false);

  m.def(
      "verify",
      [](const std::vector<std::string>& checks, double tolerance_scale) {
        VerifyOptions o;
        o.checks = checks;
        o.tolerance_scale = tolerance_scale;
        py::list out;
        for (const auto& r : run_verify(o)) {
          py::dict d;
          d["check"] = r.check;
          d["metric"] = r.metric;
          d["max_residual"] = r.max_residual;
          d["tolerance"] = r.tolerance;
          d["pass"] = r.pass;
          d["detail"] = r.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("checks") = std::vector<std::string>{}, py::arg("tolerance_scale") = 1.0);

  m.def(
      "run",
      [](const std::string& config, const std::string& out_dir, int jobs, const std::string& format) {
        CliOptions o;
        o.config_path = config;
        o.out_dir = out_dir;
        o.jobs = jobs;
        o.format = format;
        std::ostringstream out, err;
        int code = run_command(o, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("config"), py::arg("out_dir") = ".", py::arg("jobs") = 1, py::arg("format") = "");

  m.attr("__version__") = "0.1.0";
}
