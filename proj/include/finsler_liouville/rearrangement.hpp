#pragma once

// Decreasing rearrangement u* and convex symmetrization u_star(x) =
// u*(k F0(x)^N) onto the Wulff ball of the same measure, plus the Talenti
// comparison between the symmetrized solution and the solution of the
// symmetrized problem.

#include "finsler_liouville/exact_solutions.hpp"
#include "finsler_liouville/solver.hpp"

#include <string>
#include <vector>

namespace fl {

/// u* of |u| for a nodal field with lumped weights: node values sorted by
/// decreasing magnitude, node i occupying [T_{i-1}, T_i) with T_i the
/// cumulative weight. Ties keep node order.
class RearrangementProfile {
 public:
  RearrangementProfile(std::vector<double> values, std::vector<double> weights, DomainPtr source);

  /// |Omega|, the total weight.
  double measure() const { return measure_; }
  /// Sorted magnitudes, nonincreasing.
  const std::vector<double>& values() const { return values_; }
  /// Midpoints (T_{i-1} + T_i) / 2 of the occupied intervals.
  const std::vector<double>& samples() const { return samples_; }
  const DomainPtr& source() const { return source_; }

  /// Piecewise linear through (samples_i, values_i), clamped at both ends.
  /// Used for u_star; monotone by construction.
  double operator()(double t) const;
  /// The step function sup{s : mu(s) > t} of the lumped distribution.
  double step(double t) const;
  /// |{t : operator()(t) > s}|.
  double superlevel_measure(double s) const;
  /// \int_0^{|Omega|} of the linear profile.
  double integral() const;

  /// Two columns t,u_star(t) at the midpoints.
  void write_csv(const std::string& path) const;

 private:
  std::vector<double> values_, samples_, ends_;
  double measure_ = 0.0;
  DomainPtr source_;
};

RearrangementProfile decreasing_rearrangement(const ScalarField& field);

/// Radius of the Wulff ball with the measure of the profile's domain.
double symmetrized_radius(const RearrangementProfile& profile, const WulffGeometry& geom);

/// u_star(x) = u*(k F0(x)^N), on all of R^N (clamped beyond the ball).
double symmetrized_value(const RearrangementProfile& profile, const WulffGeometry& geom, const Vec& x);

/// u_star sampled on a grid of W_{R*}(0), |W_{R*}| = |Omega|. The default
/// resolution keeps the source's largest cell edge.
ScalarField convex_symmetrization(const ScalarField& field, const WulffGeometry& geom,
                                  int cells_per_axis = -1);
/// Same, onto a given Wulff ball domain.
ScalarField convex_symmetrization(const ScalarField& field, const WulffGeometry& geom,
                                  const DomainPtr& target);

struct TalentiReport {
  double max_excess = 0.0;     ///< max over nodes of W_{R*} of u_star - v
  double grad_v_max = 0.0;     ///< sup |grad v| (Euclidean) over the same nodes
  double h = 0.0;              ///< cell edge of the symmetrized grid
  double radius = 0.0;         ///< R*
  double u_max = 0.0, v_max = 0.0;
  SolveReport solve;
  nlohmann::json to_json() const;
};

/// Solves -Q_N u = f, u = 0 on dOmega; v is the F0-radial solution of
/// -Q_N v = f_star on W_{R*}, v = 0 on the boundary, from the closed form with
/// the rearranged source. Compares u_star with v at the nodes of a grid of
/// W_{R*} with the same cell edge as f's domain.
TalentiReport talenti_compare(const ScalarField& f, const FinslerGauge& gauge,
                              const SolverConfig& config = {});

}  // namespace fl
