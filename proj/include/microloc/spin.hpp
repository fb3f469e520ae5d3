#pragma once

#include <array>
#include <vector>

#include "microloc/geometry.hpp"
#include "microloc/types.hpp"

namespace microloc {

// Dirac representation, gamma^0 diagonal, {g^a, g^b} = 2 eta^{ab}.
struct FlatGammas {
  std::array<Mat4c, 4> gamma;
  Mat4c gamma5;  // i g^0 g^1 g^2 g^3
};
const FlatGammas& dirac_basis();

struct GammaSet {
  std::array<Mat4c, 4> upper;  // gamma^mu(x) = e^mu_a gamma^a
  Mat4 tetrad = Mat4::Identity();
};

GammaSet gamma_curved(const GeometryCache& cache);
Mat4c slash(const GammaSet& gammas, const Vec4& xi);
// max |{g^m,g^n} - 2 g^{mn}|
double anticommutator_residual(const GammaSet& gammas, const Mat4& g_inv);

struct SpinConnection {
  std::array<Mat4c, 4> sigma;  // sigma_mu
};

SpinConnection spin_connection(const GeometryCache& cache);
SpinConnection spin_connection_at(const MetricSpec& spec, const Vec4& x);
// sigma(v) = v^mu sigma_mu
Mat4c contract(const SpinConnection& s, const Vec4& v);

// max-norm of d_mu gamma^nu + Gamma^nu_{mu l} gamma^l + [sigma_mu, gamma^nu],
// with d_mu gamma^nu from central differences of step h.
double nabla_gamma_residual(const MetricSpec& spec, const Vec4& x, double h);

struct BispinorMatrix {
  Mat4c w = Mat4c::Zero();
  Vec4 x = Vec4::Zero();  // left base point (D_x)
  Vec4 y = Vec4::Zero();  // right base point (D*_y)
};

// Coefficients on {1, g^mu, s^{mu nu} (mu<nu: 01 02 03 12 13 23), g5, g^mu g5}
// where s^{mu nu} = i/2 [g^mu, g^nu] and g5 is the flat i g^0 g^1 g^2 g^3.
struct BispinorCoefficients {
  cplx scalar{};
  std::array<cplx, 4> vector{};
  std::array<cplx, 6> tensor{};
  cplx pseudoscalar{};
  std::array<cplx, 4> axial{};
};

std::array<Mat4c, 16> bispinor_basis(const GammaSet& gammas);
BispinorCoefficients bispinor_decompose(const Mat4c& w, const GammaSet& gammas);
Mat4c bispinor_reconstruct(const BispinorCoefficients& c, const GammaSet& gammas);

// Null space of w -> slash(xi) w on span{1, g^nu}. The 5 coefficients are
// (alpha, beta_0..beta_3) for w = alpha 1 + beta_nu g^nu.
struct CliffordKernel {
  int dimension = 0;
  double gap = 0.0;  // smallest retained / largest discarded singular value
  Eigen::Matrix<cplx, 5, 1> basis;  // a unit null vector when dimension == 1
  Eigen::Matrix<double, 5, 1> singular_values;
};
CliffordKernel clifford_kernel(const GammaSet& gammas, const Vec4& xi, double rel_threshold = 1e-8);

// Numerical rank with singular values below rel_threshold * max discarded.
int numerical_rank(const MatXc& m, double rel_threshold = 1e-8);

struct SpinorField {
  Vec4 origin = Vec4::Zero();
  Vec4 spacing = Vec4::Constant(0.01);
  std::array<int, 4> counts{1, 1, 1, 1};
  std::vector<Vec4c> values;  // index ((i0*n1 + i1)*n2 + i2)*n3 + i3

  size_t index(int i0, int i1, int i2, int i3) const {
    return ((static_cast<size_t>(i0) * counts[1] + i1) * counts[2] + i2) * counts[3] + i3;
  }
  Vec4 point(int i0, int i1, int i2, int i3) const {
    return origin + Vec4(i0 * spacing[0], i1 * spacing[1], i2 * spacing[2], i3 * spacing[3]);
  }
};

// Sample a closed-form spinor on a grid of 2*half+1 points per axis centred at c.
template <class F>
SpinorField sample_spinor_field(const Vec4& center, double h, int half, F&& f) {
  SpinorField field;
  field.spacing = Vec4::Constant(h);
  field.origin = center - Vec4::Constant(h * half);
  field.counts = {2 * half + 1, 2 * half + 1, 2 * half + 1, 2 * half + 1};
  field.values.resize(static_cast<size_t>(field.counts[0]) * field.counts[1] * field.counts[2] * field.counts[3]);
  for (int a = 0; a < field.counts[0]; ++a)
    for (int b = 0; b < field.counts[1]; ++b)
      for (int c = 0; c < field.counts[2]; ++c)
        for (int d = 0; d < field.counts[3]; ++d) field.values[field.index(a, b, c, d)] = f(field.point(a, b, c, d));
  return field;
}

struct LichnerowiczReport {
  double max_residual = 0.0;  // max-norm of LHS - RHS over interior points
  double max_lhs = 0.0;
  double max_rhs = 0.0;
  int points = 0;
  double h = 0.0;
};

// Evaluates (-i D + m)(i D + m) psi - (box - R/4 + m^2) psi at the grid points
// whose nested stencil fits (needs 2 points of padding per side), where D is
// the Dirac operator gamma^mu nabla_mu built from central differences.
LichnerowiczReport lichnerowicz_check(const MetricSpec& spec, const SpinorField& field, double mass);

}  // namespace microloc
