#pragma once

#include <array>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "microloc/hadamard.hpp"
#include "microloc/types.hpp"

namespace microloc {

enum class WindowKind { Gaussian, Bump };
enum class Verdict { Regular, Singular, Inconclusive };
const char* to_string(WindowKind w);
const char* to_string(Verdict v);

struct DetectorConfig {
  WindowKind window = WindowKind::Gaussian;
  // Window width. <= 0 picks width_factor / k_max (Gaussian: standard
  // deviation, Bump: support radius).
  double width = 0.0;
  double width_factor = 10.0;
  int sectors = 8;          // direction sectors in 2-d; 1-d always uses 2
  int subdirections = 3;    // probe directions per sector, spread over +-pi/sectors
  double k_max = 0.0;       // <= 0: 0.2 / eps of the sample
  double k_ratio = 16.0;    // k_max / k_min
  int radial_samples = 12;  // geometric ladder
  double slope_threshold = -4.0;
  double residual_threshold = 0.5;
  double floor = 1e-10;  // relative to the L1 norm of the windowed sample
  int threads = 1;

  void validate() const;  // throws InvalidArgument
  double resolved_k_max(double eps) const;
  double resolved_width(double k_max) const;
};

struct WFEntry {
  std::array<double, 2> base{0.0, 0.0};
  int sector = 0;
  double angle = 0.0;  // of the sector centre; 1-d: 0 for +, pi for -
  std::array<double, 2> direction{1.0, 0.0};
  double slope = 0.0;        // fit over the whole ladder
  double residual = 0.0;     // rms deviation of log|F| from the fit
  double upper_slope = 0.0;  // fit over the upper half of the ladder
  double peak = 0.0;         // max |F| over the ladder
  double floor = 0.0;        // absolute floor used
  Verdict verdict = Verdict::Inconclusive;
  std::vector<double> k;          // ladder
  std::vector<double> magnitude;  // sector envelope of |F|

  // Filled for two-point slices: the pair and the covectors (xi at x, -xi at y).
  bool two_point = false;
  Vec4 x = Vec4::Zero(), y = Vec4::Zero(), xi = Vec4::Zero(), eta = Vec4::Zero();
};

struct WFReport {
  DetectorConfig config;
  double k_max = 0.0;
  double width = 0.0;
  std::vector<WFEntry> entries;
  size_t count(Verdict v) const;
};

struct PolEntry {
  WFEntry wf;
  std::vector<cplx> fibre;  // unit, largest entry real positive
  double dominance = 1.0;   // s1 / s2 (infinite for one component)
};

WFReport wf_detect(const Sample& sample, const DetectorConfig& cfg, const std::vector<std::array<double, 2>>& bases);

// Entries for the sectors flagged Singular.
std::vector<PolEntry> pol_detect(const Sample& sample, const DetectorConfig& cfg,
                                 const std::vector<std::array<double, 2>>& bases);

// `slice` samples Lambda(x, y) over difference coordinates (z0, z1) = (x - y)_{0,1};
// every pair must have x - y inside that plane.
WFReport wf_detect_two_point(const Sample& slice, const DetectorConfig& cfg,
                             const std::vector<std::pair<Vec4, Vec4>>& pairs);

// Same grid, components mixed by a constant matrix: (E u)_a = E_ab u_b.
Sample apply_matrix(const Sample& sample, const MatXc& E);

// Angle arccos|<a,b>| between the complex lines through a and b (any norm).
double fibre_angle(const std::vector<cplx>& a, const std::vector<cplx>& b);

}  // namespace microloc
