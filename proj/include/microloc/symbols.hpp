#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "microloc/geometry.hpp"
#include "microloc/types.hpp"

namespace microloc {

using MultiIndex = std::array<int, 4>;

inline int order_of(const MultiIndex& a) { return a[0] + a[1] + a[2] + a[3]; }

struct SymbolTerm {
  MultiIndex alpha{};
  MatXc coeff;
};

// Coefficients of P = sum_alpha c_alpha(x) d^alpha. Terms of order below
// min_order may be left out; callers that only need the principal part ask
// for min_order = m and skip the expensive lower-order geometry.
using CoefficientFn = std::function<std::vector<SymbolTerm>(const Vec4& x, int min_order)>;

struct OperatorSpec {
  std::string family = "custom";
  int order = 0;
  int size = 1;
  int dim = 4;
  CoefficientFn coefficients;
  std::optional<MetricSpec> metric;  // set for the geometric families
  double mass = 0.0;
};

OperatorSpec scalar_wave_operator(const MetricSpec& spec, std::function<double(const Vec4&)> f = {},
                                  std::function<Vec4(const Vec4&)> a = {}, std::function<cplx(const Vec4&)> b = {});
// box_g A^nu - R^nu_mu A^mu acting on vector fields
OperatorSpec maxwell_lorentz_operator(const MetricSpec& spec);
// -i gamma^mu (d_mu + sigma_mu) + m on spinors
OperatorSpec dirac_operator(const MetricSpec& spec, double mass);
// i nabla-slash + m acting on cospinors, stored as columns psibar^T
OperatorSpec dirac_adjoint_operator(const MetricSpec& spec, double mass);
// by family name: scalar-wave, maxwell-lorentz, dirac, dirac-adjoint
OperatorSpec make_operator(const std::string& family, const MetricSpec& spec, double mass = 0.0);

// A matrix symbol that is a polynomial in xi: sum_alpha coeff_alpha(x) xi^alpha.
struct PolynomialSymbol {
  int size = 1;
  int dim = 4;
  std::function<std::vector<SymbolTerm>(const Vec4& x)> terms;

  MatXc value(const Vec4& x, const Vec4& xi) const;
  MatXc d_xi(const Vec4& x, const Vec4& xi, int mu) const;
  // central differences in x, step 1e-5 scaled to |x_mu|
  MatXc d_x(const Vec4& x, const Vec4& xi, int mu) const;
  // sum_mu d^2 / dx^mu dxi_mu
  MatXc mixed_trace(const Vec4& x, const Vec4& xi) const;
};

PolynomialSymbol principal_part(const OperatorSpec& op);
PolynomialSymbol subleading_part(const OperatorSpec& op);  // p_{m-1}

MatXc principal_symbol(const OperatorSpec& op, const Vec4& x, const Vec4& xi);
MatXc subprincipal_symbol(const OperatorSpec& op, const Vec4& x, const Vec4& xi);

struct SymbolValue {
  MatXc principal;
  MatXc subleading;
  MatXc subprincipal;
};
SymbolValue symbol_value(const OperatorSpec& op, const Vec4& x, const Vec4& xi);

struct CharSetResult {
  bool member = false;
  cplx det{};
  double threshold = 0.0;
};
// |det p| < 1e-8 * scale^N with scale = sum_{|alpha|=m} |c_alpha| |xi^alpha|
CharSetResult char_set_membership(const OperatorSpec& op, const PhasePoint& pp, double rel = 1e-8);

struct RPTFactorization {
  PolynomialSymbol ptilde;
  PolynomialSymbol q;  // 1x1, real valued
  std::string description;
  double max_residual = 0.0;  // max |p~ p - q 1| / scale over the verification samples
  int samples = 0;
};

// Paper choices for the recognised families, verified on 200 random samples.
RPTFactorization rpt_factorize(const OperatorSpec& op, int samples = 200, unsigned seed = 12345,
                               double tolerance = 1e-12);
// User candidate for other operators; verified the same way.
RPTFactorization rpt_factorize(const OperatorSpec& op, const PolynomialSymbol& ptilde, const PolynomialSymbol& q,
                               int samples = 200, unsigned seed = 12345, double tolerance = 1e-12);

// Random base point for an operator: from its metric, else the unit box.
Vec4 sample_base_point(const OperatorSpec& op, std::mt19937_64& rng);

}  // namespace microloc
