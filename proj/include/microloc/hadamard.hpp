#pragma once

#include <array>
#include <string>
#include <vector>

#include "microloc/flow.hpp"
#include "microloc/geometry.hpp"
#include "microloc/spin.hpp"

namespace microloc {

// An element (x, y; xi, -eta) of a wave front set on M x M. `eta` holds the
// second direction in that sign convention, `eta_raw` the covector at y.
struct WFElement {
  Vec4 x = Vec4::Zero();
  Vec4 y = Vec4::Zero();
  Vec4 xi = Vec4::Zero();
  Vec4 eta = Vec4::Zero();
  Vec4 eta_raw = Vec4::Zero();
  bool frequency_flag = false;  // xi in the closed future cone at x
  bool diagonal = false;        // member of a discretized diagonal family
  std::string diagnostics;
};

struct PolElement {
  WFElement wf;
  Mat4c fibre = Mat4c::Zero();  // unit Frobenius norm, largest entry real positive
};

struct WFPrediction {
  std::vector<WFElement> elements;
  bool complete = true;  // false when a geodesic query failed
  std::string note;
};

struct PolPrediction {
  std::vector<PolElement> elements;
  bool complete = true;
  std::string note;
};

enum class Relation { Related, NotRelated, NotEstablished };
const char* to_string(Relation r);

struct PredictOptions {
  int directions = 64;              // size of diagonal direction families
  double angular_tolerance = 1e-6;  // for ray comparisons
  int transport_steps = 64;         // samples on strips used for fibre transport
  BvpOptions bvp;
};

// (x, xi) ~ (y, eta): a null geodesic from x to y with tangent xi whose
// transport is eta, compared as rays.
Relation equivalence_related(const MetricSpec& spec, const PhasePoint& a, const PhasePoint& b,
                             const PredictOptions& options = {});

WFPrediction predict_wf_hadamard_scalar(const MetricSpec& spec, const Vec4& x, const Vec4& y,
                                        const PredictOptions& options = {});
// membership of a candidate ray in the predicted set
bool wf_hadamard_contains(const MetricSpec& spec, const WFElement& candidate, const PredictOptions& options = {});

// Fibres w = (1 x J^-1) slash(xi): slash(xi) at x with its right (cospinor)
// index transported to y.
PolPrediction predict_pol_dirac(const MetricSpec& spec, const Vec4& x, const Vec4& y,
                                const PredictOptions& options = {});

WFPrediction predict_wf_feynman(const MetricSpec& spec, const Vec4& x, const Vec4& y,
                                const PredictOptions& options = {});

struct Admissibility {
  bool admissible = true;
  std::vector<std::pair<size_t, size_t>> offending;  // indices into (a, b)
};
// false iff two elements over the same base point have directions summing to zero
Admissibility product_admissible(const std::vector<WFElement>& a, const std::vector<WFElement>& b,
                                 double angular_tolerance = 1e-6);

// Null directions in the orthonormal frame at x (Fibonacci sphere), future normalized.
std::vector<Vec4> null_direction_family(const MetricSpec& spec, const Vec4& x, int count);
// Nonzero directions in the frame at x, closed under xi -> -xi.
std::vector<Vec4> full_direction_family(const MetricSpec& spec, const Vec4& x, int count);

// Minkowski vacuum two-point function Lambda(x, y) regularized by x0 - y0 -> x0 - y0 + i eps.
cplx eval_minkowski_scalar(double mass, const Vec4& x, const Vec4& y, double eps);
// gradient d/dx^mu of the same function
std::array<cplx, 4> eval_minkowski_scalar_gradient(double mass, const Vec4& x, const Vec4& y, double eps);
// (i gamma^mu d_mu + m) Lambda 1, derivative in x
Mat4c eval_minkowski_dirac(double mass, const Vec4& x, const Vec4& y, double eps);

struct FourierSupport {
  bool sum_zero = false;            // xi + eta = 0
  bool positive_frequency = false;  // xi_0 > 0
  bool on_shell = false;            // xi^2 = m^2
  bool on_support = false;
  double weight = 0.0;  // (2 pi)^{-1} / (2 xi_0): mass-shell measure in xi_0
};
FourierSupport fourier_vacuum_scalar(double mass, const Vec4& xi, const Vec4& eta, double rel_tol = 1e-10);

// Regular grid in one or two dimensions.
struct GridSpec {
  int dim = 1;
  std::array<double, 2> origin{0.0, 0.0};
  std::array<double, 2> spacing{1.0, 1.0};
  std::array<int, 2> count{1, 1};

  size_t size() const { return static_cast<size_t>(count[0]) * (dim == 2 ? count[1] : 1); }
  std::array<double, 2> point(int i0, int i1 = 0) const {
    return {origin[0] + i0 * spacing[0], origin[1] + i1 * spacing[1]};
  }
};

// Sampled (regularized) distribution. values[(i1 * n0 + i0) * components + c].
struct Sample {
  std::string name;
  GridSpec grid;
  int components = 1;
  double eps = 0.0;
  int subsamples = 1;  // > 1: each value is a midpoint average over a cell of subsamples^dim points
  std::vector<cplx> values;

  cplx at(int i0, int i1, int c = 0) const {
    return values[(static_cast<size_t>(i1) * grid.count[0] + i0) * components + c];
  }
  cplx& at(int i0, int i1, int c = 0) {
    return values[(static_cast<size_t>(i1) * grid.count[0] + i0) * components + c];
  }
};

struct SampleOptions {
  bool cell_average = false;
};

// Names: delta, one_over_x_plus_ieps, v_laplace_v, v_zero, grad_delta_2d,
// smooth, minkowski_lambda (2-d slice over difference coordinates (z0, z1)).
// Needs at least 8 samples per eps (after sub-sampling), else GridTooCoarse.
Sample sample_examples(const std::string& name, const GridSpec& grid, double eps, const SampleOptions& options = {});
std::vector<std::string> sample_names();

}  // namespace microloc
