#include "finsler_liouville/exact_solutions.hpp"

#include "finsler_liouville/quadrature.hpp"

#include "bubble_table.hpp"

#include <algorithm>
#include <cmath>

namespace fl {

RadialSolution::RadialSolution(double radius, int dim, int panels, double rel_tol)
    : radius_(radius), dim_(dim), tol_(rel_tol) {
  if (!(radius > 0.0)) throw InputError("radial solution: radius must be positive");
  if (dim < 2) throw InputError("radial solution: dimension must be at least 2");
  if (panels < 1) throw InputError("radial solution: need at least one panel");
  nodes_.resize(panels + 1);
  for (int j = 0; j <= panels; ++j) nodes_[j] = radius * j / panels;
}

RadialSolution::RadialSolution(std::function<double(double)> f_star, double radius, int dim,
                               int panels, double rel_tol)
    : RadialSolution(radius, dim, panels, rel_tol) {
  f_ = std::move(f_star);
  const int m = panels;
  inner_.assign(m + 1, 0.0);
  for (int j = 0; j < m; ++j) {
    inner_[j + 1] = inner_[j] + integrate_adaptive([&](double s) { return std::pow(s, dim_ - 1) * f_(s); },
                                                   nodes_[j], nodes_[j + 1], tol_, 1e-300)
                                    .value;
  }
  tabulate();
}

RadialSolution RadialSolution::from_inner(std::function<double(double)> inner, double radius, int dim,
                                          int panels, double rel_tol) {
  RadialSolution out(radius, dim, panels, rel_tol);
  out.inner_fn_ = std::move(inner);
  out.tabulate();
  return out;
}

void RadialSolution::tabulate() {
  const int m = static_cast<int>(nodes_.size()) - 1;
  tail_.assign(m + 1, 0.0);
  for (int j = m - 1; j >= 0; --j) {
    tail_[j] = tail_[j + 1] + integrate_adaptive([&](double s) { return minus_slope(s); }, nodes_[j],
                                                 nodes_[j + 1], tol_, 1e-300)
                                  .value;
  }
}

double RadialSolution::inner(double r) const {
  if (inner_fn_) return inner_fn_(r);
  const int panels = static_cast<int>(nodes_.size()) - 1;
  const int j = std::clamp(static_cast<int>(r / radius_ * panels), 0, panels);
  if (r == nodes_[j]) return inner_[j];
  return inner_[j] + integrate_adaptive([&](double s) { return std::pow(s, dim_ - 1) * f_(s); },
                                        nodes_[j], r, tol_, 1e-300)
                         .value;
}

double RadialSolution::minus_slope(double r) const {
  if (r <= 0.0) return 0.0;
  const double i = inner(r);
  const double mag = std::pow(std::abs(i), 1.0 / (dim_ - 1)) / r;
  return i < 0.0 ? -mag : mag;
}

double RadialSolution::operator()(double r) const {
  if (!(r >= 0.0)) throw InputError("radial solution: r must be nonnegative");
  const int panels = static_cast<int>(nodes_.size()) - 1;
  if (r >= radius_) {
    if (r == radius_) return 0.0;
    return -integrate_adaptive([&](double s) { return minus_slope(s); }, radius_, r, tol_, 1e-300)
                .value;
  }
  const int j = std::min(static_cast<int>(r / radius_ * panels), panels - 1);
  if (r == nodes_[j]) return tail_[j];
  return tail_[j + 1] +
         integrate_adaptive([&](double s) { return minus_slope(s); }, r, nodes_[j + 1], tol_, 1e-300)
             .value;
}

double RadialSolution::derivative(double r) const {
  if (!(r >= 0.0)) throw InputError("radial solution: r must be nonnegative");
  return -minus_slope(r);
}

RadialSolution radial_poisson_solution(const std::function<double(double)>& f_star, double radius,
                                       int dim) {
  return RadialSolution(f_star, radius, dim);
}

namespace {

double gamma_scale(const WulffGeometry& geom) {
  const int n = geom.dimension();
  return std::pow(n * geom.k, -1.0 / (n - 1));
}

double checked_dual(const WulffGeometry& geom, const Vec& x, const char* what) {
  if (x.isZero(0)) throw SingularPointError(std::string(what) + ": pole at the origin");
  return dual_norm(geom.gauge, x);
}

}  // namespace

double fundamental_solution(const WulffGeometry& geom, const Vec& x) {
  return -gamma_scale(geom) * std::log(checked_dual(geom, x, "fundamental_solution"));
}

Vec fundamental_solution_gradient(const WulffGeometry& geom, const Vec& x) {
  const double f0 = checked_dual(geom, x, "fundamental_solution_gradient");
  return (-gamma_scale(geom) / f0) * dual_norm_grad(geom.gauge, x);
}

GreenFunction::GreenFunction(WulffGeometry geom, double radius, double alpha, Vec center)
    : geom_(std::move(geom)), radius_(radius), alpha_(alpha), center_(std::move(center)) {
  if (!(radius > 0.0)) throw InputError("Green function: radius must be positive");
  if (!(alpha > 0.0)) throw InputError("Green function: mass must be positive");
  if (center_.size() != geom_.dimension()) throw InputError("Green function: center has the wrong dimension");
  const int n = geom_.dimension();
  c_ = std::pow(alpha / (n * geom_.k), 1.0 / (n - 1));
  gamma_ = std::pow(alpha, 1.0 / (n - 1));
}

double GreenFunction::value(const Vec& x) const {
  return c_ * std::log(radius_ / checked_dual(geom_, Vec(x - center_), "Green function"));
}

Vec GreenFunction::gradient(const Vec& x) const {
  const Vec y = x - center_;
  const double f0 = checked_dual(geom_, y, "Green function gradient");
  return (-c_ / f0) * dual_norm_grad(geom_.gauge, y);
}

Vec GreenFunction::flux(const Vec& x) const { return fl::flux(geom_.gauge, gradient(x)); }

double GreenFunction::regular_part(const Vec& x) const {
  return value(x) - gamma_ * fundamental_solution(geom_, Vec(x - center_));
}

double GreenFunction::weak_identity(const std::function<Vec(const Vec&)>& grad_psi, double tol) const {
  return wulff_ball_integral(
      geom_, radius_, center_, [&](const Vec& x) { return flux(x).dot(grad_psi(x)); }, tol);
}

GreenFunction green_wulff_ball(const WulffGeometry& geom, double radius, double alpha,
                               const Vec& center) {
  return GreenFunction(geom, radius, alpha, center);
}

const std::vector<BubbleConstants>& bubble_constant_table() {
  static const std::vector<BubbleConstants> table = [] {
    const auto j = nlohmann::json::parse(detail::kBubbleConstantsJson);
    std::vector<BubbleConstants> rows;
    for (const auto& e : j.at("entries")) {
      BubbleConstants b;
      b.dimension = e.at("N").get<int>();
      b.gauge_family = e.at("gauge_family").get<std::string>();
      b.c = e.at("c_N").get<double>();
      b.a_plus_log_v0 = e.at("a_N_plus_log_V0").get<double>();
      b.mass_over_k = e.at("mass_over_k").get<double>();
      b.derivation_hash = e.at("derivation_hash").get<std::string>();
      rows.push_back(b);
    }
    return rows;
  }();
  return table;
}

const BubbleConstants& bubble_constants(int dim, GaugeFamily family) {
  const std::string name = to_string(family);
  for (const auto& b : bubble_constant_table()) {
    if (b.dimension == dim && b.gauge_family == name) return b;
  }
  throw InputError("no bubble constants for N=" + std::to_string(dim) + ", family " + name);
}

Bubble::Bubble(WulffGeometry geom, double v0, double lambda, Vec center)
    : geom_(std::move(geom)), v0_(v0), lambda_(lambda), center_(std::move(center)) {
  if (!(v0 > 0.0)) throw InputError("bubble: V0 must be positive");
  if (!(lambda > 0.0)) throw InputError("bubble: lambda must be positive");
  if (center_.size() != geom_.dimension()) throw InputError("bubble: center has the wrong dimension");
  constants_ = &bubble_constants(geom_.dimension(), geom_.gauge.family());
  a_ = constants_->a_plus_log_v0 - std::log(v0);
}

double Bubble::radial_value(double r) const {
  const int n = geom_.dimension();
  const double m = n / (n - 1.0);
  const double s = constants_->c * std::pow(lambda_ * r, m);
  return -n * std::log1p(s) + n * std::log(lambda_) + a_;
}

double Bubble::radial_derivative(double r) const {
  if (r <= 0.0) return 0.0;
  const int n = geom_.dimension();
  const double m = n / (n - 1.0);
  const double s = constants_->c * std::pow(lambda_ * r, m);
  return -n * m * s / (r * (1.0 + s));
}

double Bubble::value(const Vec& x) const { return radial_value(dual_norm(geom_.gauge, Vec(x - center_))); }

Vec Bubble::gradient(const Vec& x) const {
  const Vec y = x - center_;
  if (y.isZero(0)) return Vec::Zero(y.size());
  return radial_derivative(dual_norm(geom_.gauge, y)) * dual_norm_grad(geom_.gauge, y);
}

double Bubble::density(const Vec& x) const { return v0_ * std::exp(value(x)); }

double Bubble::max_value() const { return geom_.dimension() * std::log(lambda_) + a_; }

double Bubble::mass() const { return constants_->mass_over_k * geom_.k; }

double Bubble::mass_within(double r) const {
  const int n = geom_.dimension();
  const double s = constants_->c * std::pow(lambda_ * r, n / (n - 1.0));
  return mass() * std::pow(s / (1.0 + s), n - 1);
}

Bubble Bubble::rescaled(double delta) const {
  return Bubble(geom_, v0_, lambda_ * delta, Vec::Zero(geom_.dimension()));
}

Bubble bubble_family(const WulffGeometry& geom, double v0, double lambda, const Vec& center) {
  return Bubble(geom, v0, lambda, center);
}

nlohmann::json MeanValueReport::to_json() const {
  return nlohmann::json{{"radii", radii},
                        {"sphere_deviation", sphere_deviation},
                        {"ball_deviation", ball_deviation},
                        {"center_value", center_value},
                        {"worst", worst}};
}

MeanValueReport mean_value_check(const std::function<double(const Vec&)>& u,
                                 const WulffGeometry& geom, const std::vector<double>& radii,
                                 const Vec& center, double tol) {
  MeanValueReport rep;
  rep.radii = radii;
  rep.center_value = u(center);
  const int n = geom.dimension();
  const double area = wulff_boundary_integral(geom, 1.0, Vec::Zero(n), [](const Vec&) { return 1.0; }, tol);
  for (double r : radii) {
    const double sphere = wulff_boundary_integral(geom, r, center, u, tol) / (area * std::pow(r, n - 1));
    const double ball = wulff_ball_integral(geom, r, center, u, tol) / geom.ball_volume(r);
    rep.sphere_deviation.push_back(std::abs(sphere - rep.center_value));
    rep.ball_deviation.push_back(std::abs(ball - rep.center_value));
    rep.worst = std::max({rep.worst, rep.sphere_deviation.back(), rep.ball_deviation.back()});
  }
  return rep;
}

MeanValueReport mean_value_check(const ScalarField& u, const WulffGeometry& geom,
                                 const std::vector<double>& radii, const Vec& center, double tol) {
  return mean_value_check([&](const Vec& x) { return interpolate(u, x); }, geom, radii, center, tol);
}

std::vector<double> default_mvp_radii(double radius) {
  return {0.1 * radius, 0.2 * radius, 0.4 * radius, 0.8 * radius};
}

}  // namespace fl
