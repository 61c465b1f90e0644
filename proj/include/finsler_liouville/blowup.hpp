#pragma once

// Exponential integrability checks, local mass, blow-up detection for
// sequences of Liouville fields, and the Pohozaev balance on Wulff balls.

#include "finsler_liouville/exact_solutions.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fl {

// ---------------------------------------------------------------------------
// Exponential integrability

struct IntegrabilityRow {
  double delta = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  ///< lhs / rhs
  bool violated = false;
};

struct IntegrabilityReport {
  std::vector<IntegrabilityRow> rows;
  double beta = 0.0;
  double f_l1 = 0.0;
  double measure = 0.0;
  double d0 = 1.0;
  double slack = 0.05;
  /// Largest lhs / rhs over the grid.
  double worst_ratio() const;
  bool passed() const;
  nlohmann::json to_json() const;
  /// delta,lhs,rhs,ratio
  void write_csv(const std::string& path) const;
};

/// \int exp((beta_N - delta) |u| / |f|_1^{1/(N-1)}) against (beta_N / delta)|Omega|
/// for each delta in (0, beta_N), by lumped nodal quadrature. A row is
/// violated when lhs > rhs (1 + slack).
IntegrabilityReport thm11_check(const ScalarField& u, const ScalarField& f,
                                const std::vector<double>& deltas, const WulffGeometry& geom,
                                double slack = 0.05);

/// Same with |u - v| d0^{1/(N-1)} in the exponent, v the Q_N-harmonic
/// extension of the trace of u. The bound is again (beta_N / delta)|Omega|.
IntegrabilityReport thm12_check(const ScalarField& u, const ScalarField& v, const ScalarField& f,
                                const std::vector<double>& deltas, const WulffGeometry& geom,
                                double d0, double slack = 0.05);

/// delta = fraction * beta_N for each fraction.
std::vector<double> delta_grid(const WulffGeometry& geom, const std::vector<double>& fractions);

// ---------------------------------------------------------------------------
// Local mass

/// \int_{W_r(p)} density. Nodal weights are cut by the linear ramp
/// clamp((r - F0(x_i - p)) / (h |grad F0|) + 1/2, 0, 1), so the rule is
/// exact up to O(h^2) for smooth densities.
double local_mass(const ScalarField& density, const Vec& center, double radius,
                  const FinslerGauge& gauge);

// ---------------------------------------------------------------------------
// Blow-up detection

enum class Trichotomy { bounded, uniform_minus_infinity, concentration };
std::string to_string(Trichotomy label);

/// One member of a sequence: the solution and its coefficient V.
struct SequenceMember {
  ScalarField u;
  ScalarField V;
};

struct BlowupConfig {
  /// Growth of the local maximum across the sequence that counts as
  /// divergence to +infinity, in units of u.
  double growth_threshold = 5.0;
  /// Drop of max u across the sequence that counts as uniform divergence to
  /// -infinity.
  double decay_threshold = 5.0;
  /// Largest and smallest radius of the mass schedule r_j = r_max 2^{-j}.
  /// Non-positive values select half the smallest domain half-width
  /// and 4 h.
  double r_max = -1.0;
  double r_min = -1.0;
  /// |m(r_j) - m(r_{j+1})| <= stabilization m(r_j) stops the schedule.
  double stabilization = 0.01;
  /// Concentration points need mass >= gamma (1 - slack).
  double slack = 0.05;
  /// Monotonicity constant; negative runs estimate_d0.
  double d0 = -1.0;
};

struct MassSchedule {
  std::vector<double> radii;
  std::vector<double> masses;
  bool stabilized = false;
  /// Index of the radius whose mass was taken.
  std::size_t chosen = 0;
};

struct BlowupPoint {
  Vec position;
  double growth = 0.0;  ///< increase of the local max over the sequence
  double alpha = 0.0;   ///< stabilized local mass of the last member
  MassSchedule schedule;
};

struct BlowupReport {
  Trichotomy label = Trichotomy::bounded;
  std::vector<BlowupPoint> points;
  double gamma = 0.0;
  double q = 0.0, q_conjugate = 0.0;
  double d0 = 0.0;
  double beta = 0.0;
  std::vector<double> max_values;     ///< max u per member
  std::vector<double> total_masses;   ///< \int V e^u per member
  nlohmann::json to_json() const;
  /// radius,mass,point for every schedule entry.
  void write_mass_csv(const std::string& path) const;
};

/// gamma = (beta_N / q')^{N-1} d0.
double concentration_threshold(const WulffGeometry& geom, double q_conjugate, double d0);

/// Concentration points are local maxima of the last member whose local
/// maximum grew by growth_threshold across the sequence and whose stabilized
/// local mass is at least gamma (1 - slack); points closer than 2 r_min are
/// merged, keeping the larger mass. Without such points the label is
/// uniform_minus_infinity when max u drops monotonically by decay_threshold,
/// bounded otherwise. Throws InputError for fewer than 3 members or members
/// on different grids.
BlowupReport detect_blowup_set(const std::vector<SequenceMember>& sequence, const WulffGeometry& geom,
                               double q_conjugate, const BlowupConfig& config = {});

Trichotomy classify_trichotomy(const std::vector<SequenceMember>& sequence, const WulffGeometry& geom,
                               double q_conjugate, const BlowupConfig& config = {});

// ---------------------------------------------------------------------------
// Pohozaev balance on dW_eps(p)
//
//   \int_{dW} -F^{N-1}(grad v) <F_xi(grad v), nu> <x, grad v> + (1/N) F^N(grad v) <x, nu>
//     = \int_{dW} Z e^v <x, nu> - \int_W (N Z e^v + <x, grad Z> e^v),
//
// x measured from p, nu the outward unit normal of the Wulff sphere.

struct PohozaevBreakdown {
  double radius = 0.0;
  double flux_term = 0.0;
  double energy_term = 0.0;
  double boundary_source_term = 0.0;
  double mass_term = 0.0;      ///< -N \int_W Z e^v
  double gradient_term = 0.0;  ///< -\int_W <x, grad Z> e^v
  /// Change of the boundary quadrature at its last refinement.
  double quadrature_error = 0.0;
  double left() const { return flux_term + energy_term; }
  double right() const { return boundary_source_term + mass_term + gradient_term; }
  double residual() const { return left() - right(); }
  nlohmann::json to_json() const;
};

/// Closed-form inputs: v, grad v, Z and grad Z as functions.
struct PohozaevInput {
  std::function<double(const Vec&)> v;
  std::function<Vec(const Vec&)> grad_v;
  std::function<double(const Vec&)> Z;
  std::function<Vec(const Vec&)> grad_Z;
};

/// Wulff-sphere and Wulff-ball quadrature of every term. Z may be null (Z = 0).
PohozaevBreakdown pohozaev_terms(const PohozaevInput& input, const Vec& center, double radius,
                                 const WulffGeometry& geom, double tol = -1.0);

/// Grid inputs. Gradients are central differences at the nodes, interpolated
/// linearly; volume terms use the cut nodal weights of local_mass. Throws
/// InputError when radius < 4h or W_radius(p) leaves the active cells.
PohozaevBreakdown pohozaev_terms(const ScalarField& v, const ScalarField& Z, const Vec& center,
                                 double radius, const WulffGeometry& geom);

/// The left side for the Green function of mass alpha:
/// -(N-1) k (alpha / (N k))^{N/(N-1)}.
double pohozaev_green_left(const WulffGeometry& geom, double alpha);
/// Inverse of pohozaev_green_left.
double alpha_from_pohozaev_left(const WulffGeometry& geom, double left);

/// First-order Richardson limit from the two smallest radii.
double richardson_limit(const std::vector<double>& radii, const std::vector<double>& values);

/// Nodal central-difference gradient, one-sided next to missing neighbours.
std::vector<Vec> nodal_gradient(const ScalarField& field);

// ---------------------------------------------------------------------------
// Blow-up mass

struct MassExtractReport {
  Vec point;
  double alpha_local_mass = 0.0;
  double alpha_pohozaev = 0.0;
  double alpha_formula = 0.0;
  /// Mass of the radial bubble, for comparison.
  double alpha_bubble = 0.0;
  double gap_local_mass = 0.0;  ///< relative to alpha_formula
  double gap_pohozaev = 0.0;
  PohozaevBreakdown pohozaev;
  BlowupReport detection;
  nlohmann::json to_json() const;
};

/// Requires a single concentration point. The Pohozaev estimate inverts the
/// left side of the last member at the stabilized radius (at least 4h).
MassExtractReport blowup_mass_extract(const std::vector<SequenceMember>& sequence,
                                      const WulffGeometry& geom, double q_conjugate,
                                      const BlowupConfig& config = {});

/// One member per lambda on `domain`, V = V0. With several centers the
/// bubble densities add: u = log sum_j exp(u_{lambda, c_j}). The lumped
/// rule resolves a bubble while lambda h <= 1/2.
std::vector<SequenceMember> bubble_sequence(const DomainPtr& domain, const WulffGeometry& geom,
                                            double v0, const std::vector<double>& lambdas,
                                            const std::vector<Vec>& centers);

}  // namespace fl
