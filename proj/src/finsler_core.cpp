#include "finsler_liouville/finsler_core.hpp"

#include "finsler_liouville/key_value.hpp"
#include "finsler_liouville/quadrature.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

namespace fl {

std::string to_string(GaugeFamily family) {
  switch (family) {
    case GaugeFamily::euclidean: return "euclidean";
    case GaugeFamily::diagonal: return "diagonal";
    case GaugeFamily::p_norm: return "p_norm";
    case GaugeFamily::smoothed_p_norm: return "smoothed_p_norm";
    case GaugeFamily::user: return "user";
  }
  return "unknown";
}

namespace {

void check_dim(int dim) {
  if (dim < 2 || dim > kMaxDim) {
    throw InputError("gauge dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
  }
}

Vec random_direction(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal;
  Vec v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

FinslerGauge FinslerGauge::euclidean(int dim) {
  check_dim(dim);
  FinslerGauge g;
  g.dim_ = dim;
  g.family_ = GaugeFamily::euclidean;
  g.a_ = g.b_ = 1.0;
  return g;
}

FinslerGauge FinslerGauge::diagonal(const Eigen::VectorXd& weights) {
  check_dim(static_cast<int>(weights.size()));
  if ((weights.array() <= 0.0).any()) throw InputError("diagonal gauge weights must be positive");
  FinslerGauge g;
  g.dim_ = static_cast<int>(weights.size());
  g.family_ = GaugeFamily::diagonal;
  g.weights_ = weights;
  g.a_ = std::sqrt(weights.minCoeff());
  g.b_ = std::sqrt(weights.maxCoeff());
  return g;
}

FinslerGauge FinslerGauge::p_norm(int dim, double p) {
  check_dim(dim);
  if (!(p > 1.0) || !std::isfinite(p)) throw InputError("p-norm exponent must lie in (1, inf)");
  FinslerGauge g;
  g.dim_ = dim;
  g.family_ = GaugeFamily::p_norm;
  g.p_ = p;
  const double spread = std::pow(static_cast<double>(dim), 1.0 / p - 0.5);
  g.a_ = std::min(1.0, spread);
  g.b_ = std::max(1.0, spread);
  return g;
}

FinslerGauge FinslerGauge::smoothed_p_norm(int dim, double p, double s) {
  check_dim(dim);
  if (!(p > 1.0) || !std::isfinite(p)) throw InputError("p-norm exponent must lie in (1, inf)");
  if (!(s > 0.0)) throw InputError("smoothing parameter must be positive");
  FinslerGauge g;
  g.dim_ = dim;
  g.family_ = GaugeFamily::smoothed_p_norm;
  g.p_ = p;
  g.s_ = s;
  g.estimate_constants();
  return g;
}

FinslerGauge FinslerGauge::user(int dim, UserGaugeFunctions functions, std::string name,
                                std::optional<std::pair<double, double>> bounds) {
  check_dim(dim);
  if (!functions.value) throw InputError("user gauge requires a value callback");
  FinslerGauge g;
  g.dim_ = dim;
  g.family_ = GaugeFamily::user;
  g.name_ = std::move(name);
  g.user_ = std::make_shared<const UserGaugeFunctions>(std::move(functions));
  if (bounds) {
    g.a_ = bounds->first;
    g.b_ = bounds->second;
  } else {
    g.estimate_constants();
  }
  return g;
}

void FinslerGauge::estimate_constants() {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  auto visit = [&](const Vec& w) {
    const double f = detail::numeric_norm(*this, w);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  };
  if (dim_ == 2) {
    Vec w(2);
    for (int i = 0; i < 8192; ++i) {
      const double t = 2.0 * std::numbers::pi * i / 8192;
      w << std::cos(t), std::sin(t);
      visit(w);
    }
  } else {
    std::mt19937_64 rng(12345);
    for (int i = 0; i < 40000; ++i) visit(random_direction(rng, dim_));
    for (int i = 0; i < dim_; ++i) {
      Vec e = Vec::Zero(dim_);
      e[i] = 1.0;
      visit(e);
      visit(Vec::Constant(dim_, 1.0 / std::sqrt(double(dim_))));
    }
  }
  if (!(lo > 0.0)) throw InputError("gauge is not positive on the unit sphere");
  // Sampled extremes are inner estimates; widen slightly so the bounds hold.
  a_ = lo * (1.0 - 1e-4);
  b_ = hi * (1.0 + 1e-4);
}

std::string FinslerGauge::id() const {
  std::ostringstream os;
  switch (family_) {
    case GaugeFamily::euclidean:
      os << "euclidean[N=" << dim_ << "]";
      break;
    case GaugeFamily::diagonal:
      os << "diagonal[";
      for (Eigen::Index i = 0; i < weights_.size(); ++i) {
        os << (i ? "," : "") << format_number(weights_[i]);
      }
      os << "]";
      break;
    case GaugeFamily::p_norm:
      os << "p_norm[N=" << dim_ << ",p=" << format_number(p_) << "]";
      break;
    case GaugeFamily::smoothed_p_norm:
      os << "smoothed_p_norm[N=" << dim_ << ",p=" << format_number(p_)
         << ",s=" << format_number(s_) << "]";
      break;
    case GaugeFamily::user:
      os << "user:" << name_ << "[N=" << dim_ << "]";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Gauge spec text format

FinslerGauge parse_gauge_spec(const std::string& text_or_path) {
  std::map<std::string, std::string> kv;
  try {
    kv = parse_key_values(read_spec_text(text_or_path));
  } catch (const InputError& e) {
    throw InputError(std::string("gauge spec: ") + e.what());
  }
  std::string family = "euclidean";
  int dim = 0;
  std::vector<double> weights;
  double p = 2.0;
  double s = 0.0;
  for (const auto& [key, value] : kv) {
    if (key == "family") {
      family = value;
    } else if (key == "dimension" || key == "dim" || key == "N") {
      dim = std::stoi(value);
    } else if (key == "weights") {
      weights = parse_number_list(value);
    } else if (key == "p") {
      p = std::stod(value);
    } else if (key == "s" || key == "smoothing") {
      s = std::stod(value);
    } else {
      throw InputError("unknown gauge spec key: " + key);
    }
  }
  if (family == "diagonal") {
    if (weights.empty()) throw InputError("diagonal gauge needs weights");
    if (dim != 0 && dim != static_cast<int>(weights.size())) {
      throw InputError("diagonal gauge: dimension does not match number of weights");
    }
    return FinslerGauge::diagonal(Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size()));
  }
  if (dim == 0) dim = 2;
  if (family == "euclidean") return FinslerGauge::euclidean(dim);
  if (family == "p_norm") return FinslerGauge::p_norm(dim, p);
  if (family == "smoothed_p_norm") return FinslerGauge::smoothed_p_norm(dim, p, s);
  throw InputError("unknown gauge family: " + family);
}

std::string to_gauge_spec(const FinslerGauge& gauge) {
  std::ostringstream os;
  os << "family=" << to_string(gauge.family()) << "; dimension=" << gauge.dimension();
  switch (gauge.family()) {
    case GaugeFamily::diagonal:
      os << "; weights=";
      for (Eigen::Index i = 0; i < gauge.weights().size(); ++i) {
        os << (i ? "," : "") << format_number(gauge.weights()[i]);
      }
      break;
    case GaugeFamily::p_norm:
      os << "; p=" << format_number(gauge.exponent());
      break;
    case GaugeFamily::smoothed_p_norm:
      os << "; p=" << format_number(gauge.exponent()) << "; s=" << format_number(gauge.smoothing());
      break;
    case GaugeFamily::user:
      throw InputError("user gauges have no text representation");
    default:
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Numeric kernels

namespace detail {

namespace {

double smoothed_value(const FinslerGauge& g, const Vec& xi) {
  const double p = g.exponent();
  const double s2 = g.smoothing() * g.smoothing();
  const double r2 = xi.squaredNorm();
  Vec parts(xi.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) parts[i] = std::sqrt(xi[i] * xi[i] + s2 * r2);
  return pnorm<double>(parts, p);
}

Vec smoothed_gradient(const FinslerGauge& g, const Vec& xi) {
  const double p = g.exponent();
  const double s2 = g.smoothing() * g.smoothing();
  const double r2 = xi.squaredNorm();
  const Eigen::Index n = xi.size();
  Vec parts(n);
  for (Eigen::Index i = 0; i < n; ++i) parts[i] = std::sqrt(xi[i] * xi[i] + s2 * r2);
  const double f = pnorm<double>(parts, p);
  // dF/dxi_j = sum_i (g_i/F)^{p-1} (xi_i delta_ij + s^2 xi_j) / g_i
  double shared = 0.0;
  Vec ratio(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ratio[i] = std::pow(parts[i] / f, p - 1.0) / parts[i];
    shared += ratio[i];
  }
  Vec grad(n);
  for (Eigen::Index j = 0; j < n; ++j) grad[j] = ratio[j] * xi[j] + s2 * shared * xi[j];
  return grad;
}

Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double step) {
  Vec grad(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double fp = f(probe);
    probe[i] = x[i] - step;
    const double fm = f(probe);
    probe[i] = x[i];
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

}  // namespace

double numeric_norm(const FinslerGauge& g, const Vec& xi) {
  if (g.family() == GaugeFamily::smoothed_p_norm) return smoothed_value(g, xi);
  if (g.family() == GaugeFamily::user) return g.user_functions().value(xi);
  return norm(g, xi);
}

Vec numeric_norm_grad(const FinslerGauge& g, const Vec& xi) {
  if (g.family() == GaugeFamily::smoothed_p_norm) return smoothed_gradient(g, xi);
  const auto& fns = g.user_functions();
  if (fns.gradient) return fns.gradient(xi);
  return central_gradient(fns.value, xi, 6e-6 * xi.norm());
}

Mat numeric_norm_hess(const FinslerGauge& g, const Vec& xi) {
  const bool analytic_gradient =
      g.family() == GaugeFamily::smoothed_p_norm || static_cast<bool>(g.user_functions().gradient);
  const double step = (analytic_gradient ? 6e-6 : 1e-4) * xi.norm();
  const Eigen::Index n = xi.size();
  Mat h(n, n);
  Vec probe = xi;
  for (Eigen::Index j = 0; j < n; ++j) {
    probe[j] = xi[j] + step;
    const Vec gp = numeric_norm_grad(g, probe);
    probe[j] = xi[j] - step;
    const Vec gm = numeric_norm_grad(g, probe);
    probe[j] = xi[j];
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

double numeric_dual_norm(const FinslerGauge& g, const Vec& x, Vec* gradient) {
  // F0(x)^2 / 2 = max_xi <x, xi> - F(xi)^2 / 2, a smooth strictly concave
  // problem when Hess(F^2) is positive definite. Damped Newton from up to 32
  // starts. Any xi certifies
  //   lambda = <x, xi> / F(xi) <= F0(x) <= lambda + |x - lambda grad F(xi)| / a.
  constexpr int kRestarts = 32;
  constexpr double kTol = 1e-12;
  constexpr double kAccept = 1e-10;
  const Eigen::Index n = x.size();
  const double a = g.lower_constant();
  const double fx = numeric_norm(g, x);
  double best_value = -std::numeric_limits<double>::infinity();
  double best_gap = std::numeric_limits<double>::infinity();
  Vec best_xi = x;
  std::mt19937_64 rng(0x5eed);

  auto objective = [&](const Vec& xi) {
    const double f = numeric_norm(g, xi);
    return x.dot(xi) - 0.5 * f * f;
  };
  auto certify = [&](const Vec& xi, double* lambda) {
    const double f = numeric_norm(g, xi);
    *lambda = x.dot(xi) / f;
    return (x - *lambda * numeric_norm_grad(g, xi)).norm() / a;
  };

  for (int start = 0; start < kRestarts; ++start) {
    Vec xi = (start == 0) ? Vec(x * (x.squaredNorm() / (fx * fx)))
                          : Vec(random_direction(rng, static_cast<int>(n)) * (x.norm() / (a * a)));
    for (int it = 0; it < 60; ++it) {
      double lambda = 0.0;
      const double gap = certify(xi, &lambda);
      if (lambda > 0.0 && gap < best_gap) {
        best_value = lambda;
        best_gap = gap;
        best_xi = xi;
      }
      if (lambda > 0.0 && gap <= kTol * lambda) break;
      const double f = numeric_norm(g, xi);
      const Vec grad_f = numeric_norm_grad(g, xi);
      const Vec ascent = x - f * grad_f;
      Mat hess = grad_f * grad_f.transpose() + f * numeric_norm_hess(g, xi);
      Eigen::LDLT<Mat> ldlt(hess);
      Vec step = ascent;
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        step = ldlt.solve(ascent);
        if (!(step.dot(ascent) > 0.0)) step = ascent;
      }
      const double current = objective(xi);
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vec trial = xi + t * step;
        // Near the optimum the objective stalls at round-off; accept steps
        // that still shrink the stationarity residual.
        const double ft = numeric_norm(g, trial);
        const bool armijo = objective(trial) >= current + 1e-4 * t * step.dot(ascent);
        if (armijo || (x - ft * numeric_norm_grad(g, trial)).norm() < 0.5 * ascent.norm()) {
          xi = trial;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    if (best_value > 0.0 && best_gap <= kTol * best_value) break;
  }
  if (!(best_value > 0.0) || best_gap > kAccept * best_value) {
    throw ConvergenceError("dual norm maximization did not converge", best_value, best_gap);
  }
  if (gradient) *gradient = best_xi / numeric_norm(g, best_xi);
  return best_value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Wulff geometry

double default_quadrature_tol(int dim) { return dim <= 2 ? 1e-8 : 1e-6; }

double wulff_volume(const FinslerGauge& gauge, double tol) {
  const int n = gauge.dimension();
  const double unit_ball = std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  switch (gauge.family()) {
    case GaugeFamily::euclidean:
      return unit_ball;
    case GaugeFamily::diagonal:
      return unit_ball * gauge.weights().array().sqrt().prod();
    case GaugeFamily::p_norm: {
      const double q = gauge.exponent() / (gauge.exponent() - 1.0);
      return std::pow(2.0 * std::tgamma(1.0 + 1.0 / q), n) / std::tgamma(1.0 + n / q);
    }
    default:
      break;
  }
  if (tol <= 0.0) tol = default_quadrature_tol(n);
  const auto result = integrate_sphere(
      n, [&](const Vec& w) { return std::pow(dual_norm(gauge, w), -n); }, tol);
  return result.value / n;
}

WulffGeometry WulffGeometry::from_gauge(const FinslerGauge& gauge, double tol) {
  if (tol <= 0.0) tol = default_quadrature_tol(gauge.dimension());
  return WulffGeometry{gauge, wulff_volume(gauge, tol), tol};
}

double wulff_boundary_integral(const WulffGeometry& geom, double r, const Vec& center,
                               const std::function<double(const WulffBoundaryPoint&)>& g,
                               double tol) {
  if (!(r > 0.0)) throw InputError("wulff_boundary_integral: radius must be positive");
  if (tol <= 0.0) tol = geom.quadrature_tol;
  const int n = geom.dimension();
  WulffBoundaryPoint point;
  const auto result = integrate_sphere(
      n,
      [&](const Vec& w) {
        const double f0 = dual_norm(geom.gauge, w);
        point.dual_grad = dual_norm_grad(geom.gauge, w);
        const double grad_norm = point.dual_grad.norm();
        point.offset = (r / f0) * w;
        point.x = center + point.offset;
        point.normal = point.dual_grad / grad_norm;
        return g(point) * std::pow(r, n - 1) * grad_norm / std::pow(f0, n);
      },
      tol);
  return result.value;
}

double wulff_boundary_integral(const WulffGeometry& geom, double r, const Vec& center,
                               const std::function<double(const Vec&)>& g, double tol) {
  return wulff_boundary_integral(
      geom, r, center, [&](const WulffBoundaryPoint& p) { return g(p.x); }, tol);
}

double wulff_ball_integral(const WulffGeometry& geom, double r, const Vec& center,
                           const std::function<double(const Vec&)>& g, double tol) {
  if (!(r > 0.0)) throw InputError("wulff_ball_integral: radius must be positive");
  if (tol <= 0.0) tol = geom.quadrature_tol;
  const int n = geom.dimension();
  // Size of g over the ball, from axis points at F0 = r/2 and r (the center
  // is skipped: integrands may have a pole there). Rays along which g cancels
  // to round-off then stop at an absolute floor instead of chasing a relative
  // tolerance.
  double g_scale = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = r / dual_norm(geom.gauge, Vec::Unit(n, i));
    for (double s : {-1.0, -0.5, 0.5, 1.0}) g_scale = std::max(g_scale, std::abs(g(center + s * e)));
  }
  const double radial_floor = std::max(1e-300, 0.1 * tol * g_scale * std::pow(r, n) / n);
  const auto result = integrate_sphere(
      n,
      [&](const Vec& w) {
        const double f0 = dual_norm(geom.gauge, w);
        const Vec dir = w / f0;
        const auto radial = integrate_adaptive(
            [&](double t) { return std::pow(t, n - 1) * g(center + t * dir); }, 0.0, r,
            0.1 * tol, radial_floor);
        return radial.value / std::pow(f0, n);
      },
      tol);
  return result.value;
}

double wulff_unit_sphere_area(const WulffGeometry& geom) {
  return wulff_boundary_integral(geom, 1.0, Vec::Zero(geom.dimension()),
                                 [](const Vec&) { return 1.0; });
}

Vec wulff_extent(const FinslerGauge& gauge) {
  Vec out(gauge.dimension());
  for (int i = 0; i < gauge.dimension(); ++i) {
    Vec e = Vec::Zero(gauge.dimension());
    e[i] = 1.0;
    out[i] = norm(gauge, e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Property checks

const PropertyCheck& NormPropertyReport::at(const std::string& property) const {
  for (const auto& c : checks) {
    if (c.property == property) return c;
  }
  throw InputError("no such property in report: " + property);
}

double NormPropertyReport::worst() const {
  double w = 0.0;
  for (const auto& c : checks) w = std::max(w, c.worst_violation);
  return w;
}

namespace {

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

nlohmann::json NormPropertyReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json item{{"property", c.property}, {"worst_violation", c.worst_violation},
                        {"witness", vec_json(c.witness)}};
    if (c.witness_secondary.size() > 0) item["witness_secondary"] = vec_json(c.witness_secondary);
    out.push_back(item);
  }
  return out;
}

NormPropertyReport verify_norm_properties(const FinslerGauge& gauge, std::size_t sample_count,
                                          std::uint64_t seed) {
  if (sample_count < 1) throw InputError("verify_norm_properties: sample_count must be >= 1");
  const int n = gauge.dimension();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_mag(-2.0, 2.0);
  std::uniform_real_distribution<double> scale(-10.0, 10.0);
  const double a = gauge.lower_constant();
  const double b = gauge.upper_constant();

  NormPropertyReport report;
  report.sample_count = sample_count;
  const std::vector<std::string> names = {
      "homogeneity",          "evenness",           "triangle_inequality",
      "gradient_bound",       "euler_identity",     "polarity",
      "gradient_parity",      "inverse_gradient_map", "norm_equivalence"};
  for (const auto& name : names) report.checks.push_back({name, 0.0, Vec::Zero(n), Vec()});

  auto record = [&](std::size_t idx, double violation, const Vec& w, const Vec& w2 = Vec()) {
    auto& c = report.checks[idx];
    if (!(violation <= c.worst_violation)) {
      c.worst_violation = std::isnan(violation) ? std::numeric_limits<double>::infinity() : violation;
      c.witness = w;
      c.witness_secondary = w2;
    }
  };
  auto sample = [&]() { return Vec(random_direction(rng, n) * std::pow(10.0, log_mag(rng))); };

  for (std::size_t s = 0; s < sample_count; ++s) {
    const Vec xi = sample();
    const Vec y = sample();
    const Vec x = sample();
    double t = scale(rng);
    if (t == 0.0) t = 1.0;
    try {
      const double f = norm(gauge, xi);
      record(0, std::abs(norm(gauge, Vec(t * xi)) - std::abs(t) * f) / (std::abs(t) * f), xi);
      record(1, std::abs(norm(gauge, Vec(-xi)) - f) / f, xi);
      const double fy = norm(gauge, y);
      const double fsum = norm(gauge, Vec(xi + y));
      record(2, std::max({0.0, std::abs(f - fy) - fsum, fsum - f - fy}) / (f + fy), xi, y);
      const Vec grad = norm_grad(gauge, xi);
      record(3, std::max(0.0, grad.norm() - b) / b, xi);
      const double f0 = dual_norm(gauge, x);
      const Vec dgrad = dual_norm_grad(gauge, x);
      record(4, std::max(std::abs(xi.dot(grad) - f) / f, std::abs(x.dot(dgrad) - f0) / f0), xi, x);
      record(5, std::max(std::abs(norm(gauge, dgrad) - 1.0), std::abs(dual_norm(gauge, grad) - 1.0)),
             x, xi);
      const Vec grad_t = norm_grad(gauge, Vec(t * xi));
      const double sgn = t > 0.0 ? 1.0 : -1.0;
      record(6, (grad_t - sgn * grad).cwiseAbs().maxCoeff() / grad.cwiseAbs().maxCoeff(), xi);
      const Vec back = f0 * norm_grad(gauge, dgrad);
      record(7, (back - x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff(), x);
      const double r = xi.norm();
      record(8, std::max({0.0, a * r - f, f - b * r}) / r, xi);
    } catch (const Error&) {
      record(5, std::numeric_limits<double>::infinity(), x, xi);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// d0 search

namespace {

// Minimizes f over R^dim from x0 with initial simplex edge `step`.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, double step, int max_iterations,
                            double* best) {
  const Eigen::Index dim = x0.size();
  std::vector<Eigen::VectorXd> pts(dim + 1, x0);
  std::vector<double> vals(dim + 1);
  for (Eigen::Index i = 0; i < dim; ++i) pts[i + 1][i] += step;
  for (Eigen::Index i = 0; i <= dim; ++i) vals[i] = f(pts[i]);
  std::vector<Eigen::Index> order(dim + 1);
  for (int it = 0; it < max_iterations; ++it) {
    for (Eigen::Index i = 0; i <= dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto l, auto r) { return vals[l] < vals[r]; });
    const auto ib = order.front();
    const auto iw = order.back();
    const auto isw = order[dim - 1];
    if (std::abs(vals[iw] - vals[ib]) <= 1e-15 * (std::abs(vals[ib]) + 1e-300)) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i <= dim; ++i) {
      if (i != iw) centroid += pts[i];
    }
    centroid /= double(dim);
    const Eigen::VectorXd xr = centroid + (centroid - pts[iw]);
    const double fr = f(xr);
    if (fr < vals[ib]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[iw]);
      const double fe = f(xe);
      if (fe < fr) {
        pts[iw] = xe;
        vals[iw] = fe;
      } else {
        pts[iw] = xr;
        vals[iw] = fr;
      }
    } else if (fr < vals[isw]) {
      pts[iw] = xr;
      vals[iw] = fr;
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (pts[iw] - centroid);
      const double fc = f(xc);
      if (fc < vals[iw]) {
        pts[iw] = xc;
        vals[iw] = fc;
      } else {
        for (Eigen::Index i = 0; i <= dim; ++i) {
          if (i == ib) continue;
          pts[i] = pts[ib] + 0.5 * (pts[i] - pts[ib]);
          vals[i] = f(pts[i]);
        }
      }
    }
  }
  const auto ib = std::min_element(vals.begin(), vals.end()) - vals.begin();
  *best = vals[ib];
  return pts[ib];
}

}  // namespace

MonotonicityConstant estimate_d0(const FinslerGauge& gauge, const D0SearchConfig& config) {
  const int n = gauge.dimension();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> log_mag(-2.0, 2.0);
  const double inf = std::numeric_limits<double>::infinity();

  auto ratio = [&](const Vec& x, const Vec& y) -> double {
    if (x.isZero(0) || y.isZero(0) || (x - y).norm() <= 1e-14 * (x.norm() + y.norm())) return inf;
    const double d = monotonicity_ratio(gauge, x, y);
    return std::isfinite(d) ? d : inf;
  };

  using Entry = std::pair<double, std::pair<Vec, Vec>>;
  auto cmp = [](const Entry& l, const Entry& r) { return l.first < r.first; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> best(cmp);
  MonotonicityConstant out;
  out.d0_estimate = inf;
  for (std::size_t s = 0; s < config.samples; ++s) {
    Vec x = random_direction(rng, n);
    x /= norm(gauge, x);
    const Vec y = random_direction(rng, n) * std::pow(10.0, log_mag(rng));
    const double d = ratio(x, y);
    if (!std::isfinite(d)) continue;
    ++out.sample_count;
    if (d < out.d0_estimate) {
      out.d0_estimate = d;
      out.argmin_x = x;
      out.argmin_y = y;
    }
    if (best.size() < config.polish_starts) {
      best.push({d, {x, y}});
    } else if (config.polish_starts > 0 && d < best.top().first) {
      best.pop();
      best.push({d, {x, y}});
    }
  }
  std::vector<Entry> starts;
  while (!best.empty()) {
    starts.push_back(best.top());
    best.pop();
  }
  std::reverse(starts.begin(), starts.end());
  for (const auto& [value, pair] : starts) {
    Eigen::VectorXd z(2 * n);
    z.head(n) = pair.first;
    z.tail(n) = pair.second;
    auto objective = [&](const Eigen::VectorXd& v) {
      return ratio(Vec(v.head(n)), Vec(v.tail(n)));
    };
    double polished = inf;
    const Eigen::VectorXd zb =
        nelder_mead(objective, z, 0.05 * z.norm(), config.polish_iterations, &polished);
    if (polished < out.d0_estimate) {
      const Vec x = zb.head(n);
      const double scale = norm(gauge, x);
      out.d0_estimate = polished;
      out.argmin_x = x / scale;
      out.argmin_y = Vec(zb.tail(n)) / scale;
    }
  }
  if (!std::isfinite(out.d0_estimate)) throw InputError("estimate_d0: no valid sample pair");
  return out;
}

// ---------------------------------------------------------------------------
// Mean-value condition

double mvp_condition_ratio(const FinslerGauge& gauge, const Vec& x, const Vec& y) {
  const int n = gauge.dimension();
  const double lhs = norm_grad(gauge, x).dot(dual_norm_grad(gauge, y));
  const double rhs = x.dot(y) / (std::pow(norm(gauge, x), n - 1) * dual_norm(gauge, y));
  return lhs / rhs;
}

MvpConditionReport check_mvp_condition(const FinslerGauge& gauge, std::size_t sample_count,
                                       double tol, std::uint64_t seed) {
  const int n = gauge.dimension();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_mag(-2.0, 2.0);
  MvpConditionReport report;
  report.witness_x = Vec::Zero(n);
  report.witness_y = Vec::Zero(n);
  std::size_t attempts = 0;
  while (report.sample_count < sample_count && attempts < 100 * sample_count + 100) {
    ++attempts;
    const Vec x = random_direction(rng, n) * std::pow(2.0, log_mag(rng));
    const Vec y = random_direction(rng, n) * std::pow(2.0, log_mag(rng));
    if (std::abs(x.dot(y)) < 0.1 * x.norm() * y.norm()) continue;
    ++report.sample_count;
    const double ratio = mvp_condition_ratio(gauge, x, y);
    const double residual = std::abs(ratio - 1.0);
    if (!(residual <= report.worst_residual)) {
      report.worst_residual = residual;
      report.witness_ratio = ratio;
      report.witness_x = x;
      report.witness_y = y;
    }
  }
  report.holds = report.worst_residual <= tol;
  return report;
}

double beta_constant(int dim, double k) {
  const double n = dim;
  return std::pow(n, n / (n - 1.0)) * std::pow(k, 1.0 / (n - 1.0));
}

double alpha_formula(int dim, double k) {
  const double n = dim;
  return std::pow(std::pow(n, n + 1.0) * std::pow(k, 1.0 / (n - 1.0)) / (n - 1.0), 1.0 / (n - 1.0));
}

double alpha_pohozaev_balance(int dim, double k) {
  const double n = dim;
  return n * std::pow(n * n / (n - 1.0), n - 1.0) * k;
}

}  // namespace fl
