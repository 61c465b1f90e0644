#pragma once

// Finsler gauges F on R^N, their duals F0, Wulff shapes and the structural
// constants built from them.
//
// Gauge kernels are free function templates over Eigen expressions: any
// floating scalar works for the analytic families (euclidean, diagonal,
// p-norm). The smoothed p-norm and user-supplied gauges are evaluated in
// double precision.

#include "finsler_liouville/types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace fl {

enum class GaugeFamily { euclidean, diagonal, p_norm, smoothed_p_norm, user };

std::string to_string(GaugeFamily family);

/// Callbacks describing a user gauge. `gradient` is optional; central
/// differences are used when it is empty.
struct UserGaugeFunctions {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

/// An even, 1-homogeneous convex norm F on R^N with equivalence constants
/// a|xi| <= F(xi) <= b|xi|. Immutable value type; cheap to copy.
class FinslerGauge {
 public:
  static FinslerGauge euclidean(int dim);
  /// F(xi) = sqrt(sum_i w_i xi_i^2). The Wulff shape is the ellipsoid with
  /// semi-axes sqrt(w_i).
  static FinslerGauge diagonal(const Eigen::VectorXd& weights);
  /// F(xi) = (sum_i |xi_i|^p)^(1/p), 1 < p < inf. For p != 2 the Hessian of F^2
  /// degenerates (p > 2) or blows up (p < 2) on the coordinate axes.
  static FinslerGauge p_norm(int dim, double p);
  /// F(xi) = (sum_i (xi_i^2 + s^2 |xi|^2)^(p/2))^(1/p), s > 0. Homogeneous,
  /// even and smooth off the origin, with positive definite Hess(F^2).
  static FinslerGauge smoothed_p_norm(int dim, double p, double s);
  /// Arbitrary gauge. The constants a, b are estimated by sampling unless given.
  static FinslerGauge user(int dim, UserGaugeFunctions functions, std::string name = "user",
                           std::optional<std::pair<double, double>> bounds = std::nullopt);

  int dimension() const { return dim_; }
  GaugeFamily family() const { return family_; }
  double lower_constant() const { return a_; }
  double upper_constant() const { return b_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double exponent() const { return p_; }
  double smoothing() const { return s_; }
  const UserGaugeFunctions& user_functions() const { return *user_; }
  const std::string& name() const { return name_; }

  /// True when the dual norm has a closed form.
  bool has_analytic_dual() const {
    return family_ == GaugeFamily::euclidean || family_ == GaugeFamily::diagonal ||
           family_ == GaugeFamily::p_norm;
  }

  /// Stable identifier, e.g. "diagonal[1,4]" or "p_norm[N=2,p=4]".
  std::string id() const;

 private:
  FinslerGauge() = default;
  void estimate_constants();

  int dim_ = 2;
  GaugeFamily family_ = GaugeFamily::euclidean;
  Eigen::VectorXd weights_;
  double p_ = 2.0;
  double s_ = 0.0;
  double a_ = 1.0;
  double b_ = 1.0;
  std::string name_;
  std::shared_ptr<const UserGaugeFunctions> user_;
};

/// Parses the plain-text gauge description, e.g.
///   "family=diagonal; dimension=2; weights=1,4"
///   "family=p_norm; dimension=3; p=4"
///   "family=smoothed_p_norm; dimension=2; p=4; s=0.2"
/// Pairs are separated by ';' or newlines. If `text` names a readable file,
/// the file contents are parsed instead.
FinslerGauge parse_gauge_spec(const std::string& text);
std::string to_gauge_spec(const FinslerGauge& gauge);

namespace detail {

template <typename Derived>
Vec to_double(const Eigen::MatrixBase<Derived>& v) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
  return out;
}

template <typename Scalar, typename Derived>
VecN<Scalar> cast_vec(const Eigen::MatrixBase<Derived>& v) {
  VecN<Scalar> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<Scalar>(v[i]);
  return out;
}

// Double-precision paths for families without closed forms.
double numeric_norm(const FinslerGauge& g, const Vec& xi);
Vec numeric_norm_grad(const FinslerGauge& g, const Vec& xi);
Mat numeric_norm_hess(const FinslerGauge& g, const Vec& xi);
double numeric_dual_norm(const FinslerGauge& g, const Vec& x, Vec* gradient);

template <typename Scalar>
Scalar pnorm(const VecN<Scalar>& v, Scalar p) {
  using std::abs;
  using std::pow;
  const Scalar m = v.cwiseAbs().maxCoeff();
  if (m == Scalar(0)) return Scalar(0);
  Scalar sum(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += pow(abs(v[i]) / m, p);
  return m * pow(sum, Scalar(1) / p);
}

template <typename Scalar>
VecN<Scalar> pnorm_grad(const VecN<Scalar>& v, Scalar p) {
  using std::abs;
  using std::pow;
  const Scalar n = pnorm(v, p);
  VecN<Scalar> g(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const Scalar sgn = v[i] > Scalar(0) ? Scalar(1) : (v[i] < Scalar(0) ? Scalar(-1) : Scalar(0));
    g[i] = sgn * pow(abs(v[i]) / n, p - Scalar(1));
  }
  return g;
}

template <typename Scalar>
MatN<Scalar> pnorm_hess(const VecN<Scalar>& v, Scalar p) {
  using std::abs;
  using std::max;
  using std::pow;
  const Scalar n = pnorm(v, p);
  const VecN<Scalar> g = pnorm_grad(v, p);
  MatN<Scalar> h = -(g * g.transpose());
  // |xi_i|^(p-2) is unbounded on the axes for p < 2; clamp the ratio.
  const Scalar floor = Scalar(1e-8);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    h(i, i) += pow(max(abs(v[i]) / n, floor), p - Scalar(2));
  }
  return (p - Scalar(1)) / n * h;
}

template <typename Derived>
void require_nonzero(const Eigen::MatrixBase<Derived>& v, const char* what) {
  if (v.isZero(0)) throw SingularPointError(std::string(what) + ": singular at the origin");
}

template <typename Derived>
void require_dim(const FinslerGauge& g, const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != g.dimension()) throw InputError("vector dimension does not match gauge dimension");
}

}  // namespace detail

/// F(xi).
template <typename Derived>
typename Derived::Scalar norm(const FinslerGauge& g, const Eigen::MatrixBase<Derived>& xi) {
  using Scalar = typename Derived::Scalar;
  detail::require_dim(g, xi);
  const VecN<Scalar> v = xi;
  switch (g.family()) {
    case GaugeFamily::euclidean:
      return v.norm();
    case GaugeFamily::diagonal: {
      Scalar sum(0);
      for (Eigen::Index i = 0; i < v.size(); ++i) sum += Scalar(g.weights()[i]) * v[i] * v[i];
      using std::sqrt;
      return sqrt(sum);
    }
    case GaugeFamily::p_norm:
      return detail::pnorm<Scalar>(v, Scalar(g.exponent()));
    default:
      return Scalar(detail::numeric_norm(g, detail::to_double(v)));
  }
}

/// Gradient F_xi. 0-homogeneous and odd. Throws SingularPointError at 0.
template <typename Derived>
VecN<typename Derived::Scalar> norm_grad(const FinslerGauge& g,
                                         const Eigen::MatrixBase<Derived>& xi) {
  using Scalar = typename Derived::Scalar;
  detail::require_dim(g, xi);
  detail::require_nonzero(xi, "norm_grad");
  const VecN<Scalar> v = xi;
  switch (g.family()) {
    case GaugeFamily::euclidean:
      return v / v.norm();
    case GaugeFamily::diagonal: {
      VecN<Scalar> wv(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) wv[i] = Scalar(g.weights()[i]) * v[i];
      return wv / norm(g, v);
    }
    case GaugeFamily::p_norm:
      return detail::pnorm_grad<Scalar>(v, Scalar(g.exponent()));
    default:
      return detail::cast_vec<Scalar>(detail::numeric_norm_grad(g, detail::to_double(v)));
  }
}

/// Hessian of F (not of F^2). (-1)-homogeneous. Throws at 0.
template <typename Derived>
MatN<typename Derived::Scalar> norm_hess(const FinslerGauge& g,
                                         const Eigen::MatrixBase<Derived>& xi) {
  using Scalar = typename Derived::Scalar;
  detail::require_dim(g, xi);
  detail::require_nonzero(xi, "norm_hess");
  const VecN<Scalar> v = xi;
  const Eigen::Index n = v.size();
  switch (g.family()) {
    case GaugeFamily::euclidean: {
      const Scalar r = v.norm();
      const VecN<Scalar> u = v / r;
      return (MatN<Scalar>::Identity(n, n) - u * u.transpose()) / r;
    }
    case GaugeFamily::diagonal: {
      const Scalar f = norm(g, v);
      VecN<Scalar> wv(n);
      MatN<Scalar> w = MatN<Scalar>::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        w(i, i) = Scalar(g.weights()[i]);
        wv[i] = w(i, i) * v[i];
      }
      return (w - wv * wv.transpose() / (f * f)) / f;
    }
    case GaugeFamily::p_norm:
      return detail::pnorm_hess<Scalar>(v, Scalar(g.exponent()));
    default: {
      const Mat h = detail::numeric_norm_hess(g, detail::to_double(v));
      return h.template cast<Scalar>();
    }
  }
}

/// The flux F^{N-1}(xi) F_xi(xi) = grad(F^N / N), N the gauge dimension.
/// Continuous at the origin, where it vanishes.
template <typename Derived>
VecN<typename Derived::Scalar> flux(const FinslerGauge& g, const Eigen::MatrixBase<Derived>& xi) {
  using Scalar = typename Derived::Scalar;
  if (xi.isZero(0)) return VecN<Scalar>::Zero(xi.size());
  using std::pow;
  return pow(norm(g, xi), Scalar(g.dimension() - 1)) * norm_grad(g, xi);
}

/// Hessian of F^N, N the gauge dimension:
///   N F^{N-1} Hess F + N (N-1) F^{N-2} grad F grad F^T.
template <typename Derived>
MatN<typename Derived::Scalar> hess_fn(const FinslerGauge& g,
                                       const Eigen::MatrixBase<Derived>& xi) {
  using Scalar = typename Derived::Scalar;
  using std::pow;
  const Scalar n = Scalar(g.dimension());
  const Scalar f = norm(g, xi);
  const VecN<Scalar> grad = norm_grad(g, xi);
  return n * pow(f, n - Scalar(1)) * norm_hess(g, xi) +
         n * (n - Scalar(1)) * pow(f, n - Scalar(2)) * (grad * grad.transpose());
}

/// Dual norm F0(x) = sup_{F(xi) < 1} <x, xi>.
template <typename Derived>
typename Derived::Scalar dual_norm(const FinslerGauge& g, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  detail::require_dim(g, x);
  const VecN<Scalar> v = x;
  switch (g.family()) {
    case GaugeFamily::euclidean:
      return v.norm();
    case GaugeFamily::diagonal: {
      Scalar sum(0);
      for (Eigen::Index i = 0; i < v.size(); ++i) sum += v[i] * v[i] / Scalar(g.weights()[i]);
      using std::sqrt;
      return sqrt(sum);
    }
    case GaugeFamily::p_norm: {
      const Scalar p = Scalar(g.exponent());
      return detail::pnorm<Scalar>(v, p / (p - Scalar(1)));
    }
    default:
      if (v.isZero(0)) return Scalar(0);
      return Scalar(detail::numeric_dual_norm(g, detail::to_double(v), nullptr));
  }
}

/// Gradient of F0. Throws at 0.
template <typename Derived>
VecN<typename Derived::Scalar> dual_norm_grad(const FinslerGauge& g,
                                              const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  detail::require_dim(g, x);
  detail::require_nonzero(x, "dual_norm_grad");
  const VecN<Scalar> v = x;
  switch (g.family()) {
    case GaugeFamily::euclidean:
      return v / v.norm();
    case GaugeFamily::diagonal: {
      VecN<Scalar> out(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i] / Scalar(g.weights()[i]);
      return out / dual_norm(g, v);
    }
    case GaugeFamily::p_norm: {
      const Scalar p = Scalar(g.exponent());
      return detail::pnorm_grad<Scalar>(v, p / (p - Scalar(1)));
    }
    default: {
      Vec grad;
      detail::numeric_dual_norm(g, detail::to_double(v), &grad);
      return detail::cast_vec<Scalar>(grad);
    }
  }
}

/// d_{X,Y} = <flux(X) - flux(Y), X - Y> / F^N(X - Y).
template <typename DX, typename DY>
typename DX::Scalar monotonicity_ratio(const FinslerGauge& g, const Eigen::MatrixBase<DX>& X,
                                       const Eigen::MatrixBase<DY>& Y) {
  using Scalar = typename DX::Scalar;
  using std::pow;
  const VecN<Scalar> diff = X - Y;
  if (diff.isZero(0)) throw InputError("monotonicity_ratio: X == Y");
  const Scalar num = (flux(g, X) - flux(g, Y)).dot(diff);
  return num / pow(norm(g, diff), Scalar(g.dimension()));
}

// ---------------------------------------------------------------------------
// Wulff geometry

/// Measure of the unit Wulff ball {F0 <= 1}. Closed forms for the analytic
/// families; otherwise k = (1/N) \int_{S^{N-1}} F0(w)^{-N} dw by refined
/// spherical quadrature. Throws QuadratureError with the achieved estimate
/// when `tol` is not reached.
double wulff_volume(const FinslerGauge& gauge, double tol = -1.0);

/// Default quadrature tolerance: 1e-8 for N = 2, 1e-6 for N = 3.
double default_quadrature_tol(int dim);

struct WulffGeometry {
  FinslerGauge gauge;
  double k;
  double quadrature_tol;

  static WulffGeometry from_gauge(const FinslerGauge& gauge, double tol = -1.0);
  int dimension() const { return gauge.dimension(); }
  /// |W_r| = k r^N.
  double ball_volume(double r) const { return k * std::pow(r, dimension()); }
  /// Radius of the Wulff ball of the given measure.
  double radius_for_volume(double volume) const {
    return std::pow(volume / k, 1.0 / dimension());
  }
};

/// Point handed to boundary integrands on the Wulff sphere {F0(x - x0) = r}.
struct WulffBoundaryPoint {
  Vec x;          ///< absolute position
  Vec offset;     ///< x - x0
  Vec normal;     ///< Euclidean outward unit normal grad F0 / |grad F0|
  Vec dual_grad;  ///< grad F0(x - x0)
};

/// \int_{dW_r(x0)} g ds, Euclidean surface measure, via the parameterization
/// x = x0 + r w / F0(w), ds = r^{N-1} |grad F0(w)| F0(w)^{-N} dw.
double wulff_boundary_integral(const WulffGeometry& geom, double r, const Vec& center,
                               const std::function<double(const WulffBoundaryPoint&)>& g,
                               double tol = -1.0);
double wulff_boundary_integral(const WulffGeometry& geom, double r, const Vec& center,
                               const std::function<double(const Vec&)>& g, double tol = -1.0);

/// \int_{W_r(x0)} g dx in Wulff-polar coordinates
/// x = x0 + t w / F0(w), dx = t^{N-1} F0(w)^{-N} dt dw.
double wulff_ball_integral(const WulffGeometry& geom, double r, const Vec& center,
                           const std::function<double(const Vec&)>& g, double tol = -1.0);

/// Euclidean surface area of dW_1.
double wulff_unit_sphere_area(const WulffGeometry& geom);

/// max { <e_i, x> : F0(x) <= 1 } = F(e_i): half-width of W_1 along each axis.
Vec wulff_extent(const FinslerGauge& gauge);

// ---------------------------------------------------------------------------
// Property checks and structural constants

struct PropertyCheck {
  std::string property;
  double worst_violation = 0.0;
  Vec witness;
  Vec witness_secondary;  ///< second argument, when the property has two
};

struct NormPropertyReport {
  std::vector<PropertyCheck> checks;
  std::size_t sample_count = 0;

  const PropertyCheck& at(const std::string& property) const;
  /// Largest violation over every item.
  double worst() const;
  nlohmann::json to_json() const;
};

/// Samples random xi, x, t and measures the worst relative violation of:
/// homogeneity, evenness, triangle_inequality (|F(x)-F(y)| <= F(x+y) <= F(x)+F(y)),
/// gradient_bound (|grad F| <= b), euler_identity, polarity (F(grad F0) = 1 and
/// F0(grad F) = 1), gradient_parity (F_xi(t xi) = sgn(t) F_xi(xi)),
/// inverse_gradient_map (F0(x) F_xi(grad F0(x)) = x) and norm_equivalence
/// (a|xi| <= F <= b|xi|).
NormPropertyReport verify_norm_properties(const FinslerGauge& gauge, std::size_t sample_count,
                                          std::uint64_t seed = 7);

struct MonotonicityConstant {
  double d0_estimate = 0.0;
  std::size_t sample_count = 0;
  Vec argmin_x;
  Vec argmin_y;
};

struct D0SearchConfig {
  std::size_t samples = 1'000'000;
  std::size_t polish_starts = 100;
  int polish_iterations = 4000;
  std::uint64_t seed = 17;
};

/// Upper estimate of d0 = inf d_{X,Y}: F(X) = 1 is fixed by scale invariance,
/// Y is drawn with random direction and log-uniform magnitude, then the best
/// pairs are polished with Nelder-Mead. Degenerate pairs are never evaluated.
MonotonicityConstant estimate_d0(const FinslerGauge& gauge, const D0SearchConfig& config = {});

struct MvpConditionReport {
  bool holds = false;
  double worst_residual = 0.0;
  double witness_ratio = 1.0;  ///< LHS / RHS at the worst sample
  Vec witness_x;
  Vec witness_y;
  std::size_t sample_count = 0;
};

/// LHS / RHS of <F_xi(x), F0_xi(y)> = <x, y> / (F^{N-1}(x) F0(y)).
double mvp_condition_ratio(const FinslerGauge& gauge, const Vec& x, const Vec& y);

/// Checks the condition above at random pairs (|x| log-uniform in [1/4, 4],
/// pairs with |<x,y>| < 0.1 |x||y| skipped). Holds when every relative residual
/// is below `tol`.
MvpConditionReport check_mvp_condition(const FinslerGauge& gauge, std::size_t sample_count,
                                       double tol = 1e-8, std::uint64_t seed = 11);

/// beta_N = N^{N/(N-1)} k^{1/(N-1)}.
double beta_constant(int dim, double k);
/// Blow-up value (N^{N+1} k^{1/(N-1)} / (N-1))^{1/(N-1)} as stated for the
/// single-point blow-up theorem. Coincides with 8k at N = 2.
double alpha_formula(int dim, double k);
/// Mass of the radial bubble, N (N^2/(N-1))^{N-1} k. This is the value that
/// balances the Pohozaev identity against the Wulff-ball Green function
/// (alpha / (N k))^{1/(N-1)} log(R / F0) for every N; it equals alpha_formula
/// only at N = 2.
double alpha_pohozaev_balance(int dim, double k);

}  // namespace fl
