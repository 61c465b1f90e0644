#pragma once

// Reference solutions: the F0-radial Poisson solution, the fundamental
// solution, Green functions of Wulff balls, Liouville bubbles and the
// mean-value check.
//
// A function u(x) = v(F0(x - x0)) has grad u = v' grad F0 and F(grad F0) = 1,
// so Q_N u = r^{1-N} (r^{N-1} |v'|^{N-2} v')' for every gauge. All radial
// objects here are built on that reduction.

#include "finsler_liouville/field.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fl {

/// v solving -(r^{N-1}|v'|^{N-2}v')' / r^{N-1} = f*(r) on (0, R) with
/// v'(0) = 0, v(R) = 0:
///   -v'(r) = I(r)^{1/(N-1)} / r,  I(r) = \int_0^r s^{N-1} f*(s) ds,
/// (signed power when I < 0), and v(r) = \int_r^R -v'. Panel values are
/// tabulated at construction; each query adds one adaptive panel remainder.
/// For r > R the same formula continues v, which needs f* beyond R.
class RadialSolution {
 public:
  RadialSolution(std::function<double(double)> f_star, double radius, int dim, int panels = 128,
                 double rel_tol = 1e-11);
  /// Same with I(r) supplied directly (e.g. from a cumulative source profile).
  static RadialSolution from_inner(std::function<double(double)> inner, double radius, int dim,
                                   int panels = 128, double rel_tol = 1e-10);

  double operator()(double r) const;
  /// v'(r).
  double derivative(double r) const;
  double radius() const { return radius_; }
  int dimension() const { return dim_; }

 private:
  double inner(double r) const;  // I(r)
  double minus_slope(double r) const;

  RadialSolution(double radius, int dim, int panels, double rel_tol);
  void tabulate();

  std::function<double(double)> f_;
  std::function<double(double)> inner_fn_;
  double radius_;
  int dim_;
  double tol_;
  std::vector<double> nodes_;   // panel ends 0 = r_0 < ... < r_M = R
  std::vector<double> inner_;   // I(r_j)
  std::vector<double> tail_;    // v(r_j)
};

RadialSolution radial_poisson_solution(const std::function<double(double)>& f_star, double radius,
                                       int dim);

/// Gamma(x) = -(N k)^{-1/(N-1)} log F0(x). Throws SingularPointError at 0.
double fundamental_solution(const WulffGeometry& geom, const Vec& x);
Vec fundamental_solution_gradient(const WulffGeometry& geom, const Vec& x);

/// G(x) = c log(R / F0(x - x0)), c = (alpha / (N k))^{1/(N-1)}: the solution
/// of -Q_N G = alpha delta_{x0} in W_R(x0) with G = 0 on the boundary.
/// G = gamma Gamma(x - x0) + h with gamma = alpha^{1/(N-1)} and h = c log R.
class GreenFunction {
 public:
  GreenFunction(WulffGeometry geom, double radius, double alpha, Vec center);

  const WulffGeometry& geometry() const { return geom_; }
  double radius() const { return radius_; }
  double alpha() const { return alpha_; }
  const Vec& center() const { return center_; }
  /// c in G = c log(R / F0).
  double coefficient() const { return c_; }
  double gamma() const { return gamma_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  /// F^{N-1}(grad G) F_xi(grad G), from the gauge's own flux.
  Vec flux(const Vec& x) const;
  /// h(x) = G(x) - gamma Gamma(x - x0), evaluated from both closed forms.
  double regular_part(const Vec& x) const;

  /// \int_{W_R} <flux(G), grad psi> dx for psi vanishing near dW_R, by
  /// Wulff-polar quadrature. The t^{N-1} Jacobian cancels the flux
  /// singularity, so the integrand is bounded and no excision is needed.
  /// Should equal alpha psi(x0).
  double weak_identity(const std::function<Vec(const Vec&)>& grad_psi, double tol = 1e-9) const;

 private:
  WulffGeometry geom_;
  double radius_, alpha_;
  Vec center_;
  double c_, gamma_;
};

GreenFunction green_wulff_ball(const WulffGeometry& geom, double radius, double alpha,
                               const Vec& center);

/// Row of the shipped bubble constant table (data/bubble_constants.json).
struct BubbleConstants {
  int dimension = 0;
  std::string gauge_family;
  double c = 1.0;
  /// a_N = a_plus_log_v0 - log V0.
  double a_plus_log_v0 = 0.0;
  /// \int_{R^N} V0 e^u = mass_over_k * k.
  double mass_over_k = 0.0;
  std::string derivation_hash;
};

const std::vector<BubbleConstants>& bubble_constant_table();
/// Throws InputError when the table has no row for (N, family).
const BubbleConstants& bubble_constants(int dim, GaugeFamily family);

/// u(x) = -N log(1 + c (lambda F0(x - x0))^{N/(N-1)}) + N log lambda + a_N(V0),
/// an entire solution of -Q_N u = V0 e^u with finite mass.
class Bubble {
 public:
  Bubble(WulffGeometry geom, double v0, double lambda, Vec center);

  const WulffGeometry& geometry() const { return geom_; }
  double v0() const { return v0_; }
  double lambda() const { return lambda_; }
  const Vec& center() const { return center_; }
  const BubbleConstants& constants() const { return *constants_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  /// V0 e^{u(x)}.
  double density(const Vec& x) const;
  /// u as a function of r = F0(x - x0), and its r-derivative.
  double radial_value(double r) const;
  double radial_derivative(double r) const;
  /// u(x0) = N log lambda + a_N.
  double max_value() const;
  /// \int_{R^N} V0 e^u.
  double mass() const;
  /// \int_{W_r(x0)} V0 e^u = mass (S/(1+S))^{N-1}, S = c (lambda r)^{N/(N-1)}.
  double mass_within(double r) const;
  /// x -> u(delta x + x0) + N log delta: the member with lambda delta
  /// centred at the origin.
  Bubble rescaled(double delta) const;

 private:
  WulffGeometry geom_;
  double v0_, lambda_;
  Vec center_;
  const BubbleConstants* constants_;
  double a_;
};

Bubble bubble_family(const WulffGeometry& geom, double v0, double lambda, const Vec& center);

struct MeanValueReport {
  std::vector<double> radii;
  std::vector<double> sphere_deviation;  ///< |sphere average - u(x0)|
  std::vector<double> ball_deviation;    ///< |ball average - u(x0)|
  double center_value = 0.0;
  double worst = 0.0;

  nlohmann::json to_json() const;
};

/// Sphere average (1 / (|dW_1| r^{N-1})) \int_{dW_r(x0)} u ds and ball average
/// over W_r(x0), compared with u(x0) for each r.
MeanValueReport mean_value_check(const std::function<double(const Vec&)>& u,
                                 const WulffGeometry& geom, const std::vector<double>& radii,
                                 const Vec& center, double tol = 1e-10);
/// Same for a nodal field through its P1 interpolant. The interpolant has
/// kinks, so the quadrature tolerance is looser.
MeanValueReport mean_value_check(const ScalarField& u, const WulffGeometry& geom,
                                 const std::vector<double>& radii, const Vec& center,
                                 double tol = 1e-6);

/// {0.1, 0.2, 0.4, 0.8} R.
std::vector<double> default_mvp_radii(double radius);

}  // namespace fl
