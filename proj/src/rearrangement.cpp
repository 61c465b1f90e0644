#include "finsler_liouville/rearrangement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace fl {

RearrangementProfile::RearrangementProfile(std::vector<double> values, std::vector<double> weights,
                                           DomainPtr source)
    : source_(std::move(source)) {
  if (values.size() != weights.size()) throw InputError("rearrangement: values and weights differ in size");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });
  double t = 0.0;
  for (std::size_t i : order) {
    if (!(weights[i] > 0.0)) continue;
    if (!std::isfinite(values[i])) throw InputError("rearrangement: field has non-finite values");
    values_.push_back(std::abs(values[i]));
    samples_.push_back(t + 0.5 * weights[i]);
    t += weights[i];
    ends_.push_back(t);
  }
  if (values_.empty()) throw InputError("rearrangement: field has no weighted nodes");
  measure_ = t;
}

double RearrangementProfile::operator()(double t) const {
  if (t <= samples_.front()) return values_.front();
  if (t >= samples_.back()) return values_.back();
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - samples_.begin());
  const double w = (t - samples_[j - 1]) / (samples_[j] - samples_[j - 1]);
  return (1.0 - w) * values_[j - 1] + w * values_[j];
}

double RearrangementProfile::step(double t) const {
  if (t < 0.0) return values_.front();
  const auto it = std::upper_bound(ends_.begin(), ends_.end(), t);
  if (it == ends_.end()) return 0.0;
  return values_[static_cast<std::size_t>(it - ends_.begin())];
}

double RearrangementProfile::superlevel_measure(double s) const {
  // values_ is nonincreasing; find the last sample with value > s.
  if (values_.front() <= s) return 0.0;
  if (values_.back() > s) return measure_;
  const auto it = std::partition_point(values_.begin(), values_.end(), [&](double v) { return v > s; });
  const std::size_t j = static_cast<std::size_t>(it - values_.begin());  // values_[j] <= s < values_[j-1]
  const double w = (values_[j - 1] - s) / (values_[j - 1] - values_[j]);
  return samples_[j - 1] + w * (samples_[j] - samples_[j - 1]);
}

double RearrangementProfile::integral() const {
  double sum = values_.front() * samples_.front() + values_.back() * (measure_ - samples_.back());
  for (std::size_t j = 1; j < values_.size(); ++j) {
    sum += 0.5 * (values_[j - 1] + values_[j]) * (samples_[j] - samples_[j - 1]);
  }
  return sum;
}

void RearrangementProfile::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out.precision(17);
  out << "t,u_star\n";
  for (std::size_t j = 0; j < values_.size(); ++j) out << samples_[j] << ',' << values_[j] << '\n';
}

RearrangementProfile decreasing_rearrangement(const ScalarField& field) {
  const Domain& d = field.domain();
  const auto& w = d.weights();
  return RearrangementProfile(std::vector<double>(field.values().data(), field.values().data() + field.size()),
                              std::vector<double>(w.data(), w.data() + w.size()), field.domain_ptr());
}

double symmetrized_radius(const RearrangementProfile& profile, const WulffGeometry& geom) {
  return geom.radius_for_volume(profile.measure());
}

double symmetrized_value(const RearrangementProfile& profile, const WulffGeometry& geom, const Vec& x) {
  const double r = dual_norm(geom.gauge, x);
  return profile(geom.ball_volume(r));
}

ScalarField convex_symmetrization(const ScalarField& field, const WulffGeometry& geom,
                                  const DomainPtr& target) {
  if (target->dimension() != geom.dimension()) throw InputError("symmetrization: dimension mismatch");
  const auto profile = decreasing_rearrangement(field);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(target->node_count());
  for (Eigen::Index i = 0; i < target->node_count(); ++i) {
    if (target->kind(i) == NodeKind::outside) continue;
    values[i] = symmetrized_value(profile, geom, Vec(target->node_position(i) - target->center()));
  }
  return ScalarField(target, std::move(values));
}

ScalarField convex_symmetrization(const ScalarField& field, const WulffGeometry& geom, int cells_per_axis) {
  const Domain& d = field.domain();
  if (d.dimension() != geom.dimension()) throw InputError("symmetrization: dimension mismatch");
  const double radius = geom.radius_for_volume(d.measure());
  if (cells_per_axis <= 0) {
    const double width = 2.0 * radius * wulff_extent(geom.gauge).maxCoeff();
    cells_per_axis = std::max(2, static_cast<int>(std::lround(width / d.h())));
  }
  return convex_symmetrization(field, geom,
                               Domain::wulff_ball(geom, radius, Vec::Zero(geom.dimension()), cells_per_axis));
}

nlohmann::json TalentiReport::to_json() const {
  return nlohmann::json{{"max_excess", max_excess}, {"grad_v_max", grad_v_max}, {"h", h},
                        {"radius", radius},         {"u_max", u_max},           {"v_max", v_max},
                        {"solve", fl::to_json(solve)}};
}

TalentiReport talenti_compare(const ScalarField& f, const FinslerGauge& gauge, const SolverConfig& config) {
  const Domain& d = f.domain();
  const int n = d.dimension();
  const auto geom = WulffGeometry::from_gauge(gauge);
  TalentiReport rep;
  auto [u, solve] = solve_poisson(f, ScalarField::constant(f.domain_ptr(), 0.0), gauge, config);
  rep.solve = solve;
  if (!solve.converged) throw ConvergenceError("talenti_compare: " + solve.message, solve.residual_norm, config.tol);

  const auto f_star = decreasing_rearrangement(f);
  rep.radius = symmetrized_radius(f_star, geom);
  // I(r) = \int_0^r s^{N-1} f_star(s) ds = (1/(N k)) \int_0^{k r^N} f*(tau) dtau,
  // exact for the piecewise linear profile.
  std::vector<double> knots{0.0};
  std::vector<double> cumulative{0.0};
  for (std::size_t j = 0; j < f_star.samples().size(); ++j) {
    knots.push_back(f_star.samples()[j]);
    cumulative.push_back(cumulative.back() + 0.5 * (f_star(knots[knots.size() - 2]) + f_star.values()[j]) *
                                                 (knots.back() - knots[knots.size() - 2]));
  }
  const double nk = n * geom.k;
  auto inner = [&, knots, cumulative](double r) {
    const double tau = geom.ball_volume(r);
    if (tau >= knots.back()) return (cumulative.back() + f_star(tau) * (tau - knots.back())) / nk;
    const auto it = std::upper_bound(knots.begin(), knots.end(), tau);
    const std::size_t j = static_cast<std::size_t>(it - knots.begin());
    const double a = knots[j - 1];
    return (cumulative[j - 1] + 0.5 * (f_star(a) + f_star(tau)) * (tau - a)) / nk;
  };
  const auto v = RadialSolution::from_inner(inner, rep.radius, n, 256, 1e-10);

  const auto target = Domain::wulff_ball(
      geom, rep.radius, Vec::Zero(n),
      std::max(2, static_cast<int>(std::lround(2.0 * rep.radius * wulff_extent(gauge).maxCoeff() / d.h()))));
  rep.h = target->h();
  const auto u_star = convex_symmetrization(u, geom, target);
  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < target->node_count(); ++i) {
    if (target->kind(i) == NodeKind::outside) continue;
    const Vec x = target->node_position(i);
    const double r = dual_norm(gauge, x);
    const double vr = r <= rep.radius ? v(r) : 0.0;
    rep.max_excess = std::max(rep.max_excess, u_star[i] - vr);
    rep.u_max = std::max(rep.u_max, u_star[i]);
    rep.v_max = std::max(rep.v_max, vr);
    if (r > 0.0 && r <= rep.radius) {
      rep.grad_v_max = std::max(rep.grad_v_max, std::abs(v.derivative(r)) * dual_norm_grad(gauge, x).norm());
    }
  }
  return rep;
}

}  // namespace fl
