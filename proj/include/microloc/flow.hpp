#pragma once

#include <string>
#include <vector>

#include "microloc/geometry.hpp"
#include "microloc/spin.hpp"
#include "microloc/symbols.hpp"

namespace microloc {

struct FlowOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double drift_tolerance = 1e-9;       // max |q| / |xi0|^2 accepted on a strip
  double null_start_tolerance = 1e-10;  // |q(start)| / |xi0|^2
};

// Samples of the flow of q = g^{mn} xi_m xi_n, so dx/dtau = 2 g^{-1} xi.
struct BicharStrip {
  MetricSpec metric;
  std::vector<double> tau;
  std::vector<PhasePoint> points;
  std::vector<double> q;
  std::string hamiltonian = "g^{mn} xi_m xi_n";
  double xi0_norm2 = 0.0;

  size_t size() const { return tau.size(); }
  double max_drift() const;  // max |q| / |xi0|^2
};

BicharStrip integrate_bicharacteristic(const MetricSpec& spec, const PhasePoint& start, double tau0, double tau1,
                                       int steps, const FlowOptions& options = {});

// Null covector at x whose raised vector is the flat-frame direction (1, n).
Vec4 null_covector(const MetricSpec& spec, const Vec4& x, const Eigen::Vector3d& n);

// Smallest change of xi in the orthonormal frame that makes it null: the
// spatial part is rescaled to the length of the time part.
Vec4 project_to_null(const MetricSpec& spec, const Vec4& x, const Vec4& xi);

// Equatorial start on the Schwarzschild photon sphere r = 3M. The angular
// momentum is searched over neighbouring doubles until dxi_r/dtau evaluates to
// exactly zero, so the unstable circular orbit is a floating-point fixed point.
PhasePoint photon_sphere_start(double mass, double xi_t = 1.0);

enum class FibreKind { Vector, Spinor, Cospinor, Bispinor };

// A strip with fibre data. Bispinor fibres are 4x4 matrices stored
// column-major in 16 entries.
struct PolarizedStrip {
  BicharStrip strip;
  FibreKind kind = FibreKind::Vector;
  std::vector<VecXc> fibre;

  Mat4c bispinor(size_t k) const;
};

PolarizedStrip transport_vector(const BicharStrip& strip, const VecXc& w0, const FlowOptions& options = {});

enum class SpinorSide { Spinor, Cospinor, BispinorBoth, BispinorRightOnly };

// Spinor: dw/dtau = -sigma(x') w. Cospinor rows: dw/dtau = w sigma(x').
// BispinorBoth: dW/dtau = -sigma W + W sigma. BispinorRightOnly: dW/dtau = W sigma.
PolarizedStrip transport_spinor(const BicharStrip& strip, const VecXc& w0, SpinorSide side,
                                const FlowOptions& options = {});
PolarizedStrip transport_spinor(const BicharStrip& strip, const Mat4c& w0, SpinorSide side,
                                const FlowOptions& options = {});

enum class TransportMode { Generic, LeviCivita, Spin };

struct DenckerSpec {
  OperatorSpec op;
  RPTFactorization factorization;
  TransportMode mode = TransportMode::Generic;
};

DenckerSpec make_dencker(const OperatorSpec& op, TransportMode mode);

// The zero-order part of D_P along the flow of the strip Hamiltonian h:
// D_P w = c dw/dtau + B w, with c = <d_xi q, d_xi h> / |d_xi h|^2 and
// B = 1/2 {p~, p} + i p~ p^s.
struct DenckerCoefficients {
  double c = 0.0;
  MatXc B;
};
DenckerCoefficients dencker_coefficients(const DenckerSpec& d, const Vec4& x, const Vec4& xi);

// D_P w at each sample; dw/dtau from a five-point stencil on the (uniform) samples.
// Throws KernelViolation if some w(tau_k) is not in ker p.
std::vector<VecXc> dencker_derivative(const DenckerSpec& d, const BicharStrip& strip, const std::vector<VecXc>& w,
                                      double kernel_tolerance = 1e-6);

// Integrates D_P w = 0 along the strip. Spin and LeviCivita modes delegate to
// the dedicated transports.
PolarizedStrip hamilton_orbit(const DenckerSpec& d, const BicharStrip& strip, const VecXc& w0,
                              const FlowOptions& options = {});

// Bispinor orbit of the two-sided operator: columns follow D_P of `left`, rows
// follow D_P of `right` (the adjoint family). In Spin mode this is
// BispinorBoth transport.
PolarizedStrip hamilton_orbit_bispinor(const DenckerSpec& left, const DenckerSpec& right, const BicharStrip& strip,
                                       const Mat4c& w0, const FlowOptions& options = {});

double kernel_residual(const OperatorSpec& op, const Vec4& x, const Vec4& xi, const VecXc& w);

// max-norm difference of the normalized outer products a a* / |a|^2
double projective_distance(const VecXc& a, const VecXc& b);
// chord distance between the complex lines through a and b (about the angle)
double ray_angle(const VecXc& a, const VecXc& b);

VecXc flatten(const Mat4c& m);
Mat4c unflatten(const VecXc& v);

}  // namespace microloc
