#include "finsler_liouville/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace fl {

namespace {

double lumped_l1(const ScalarField& f) {
  const auto& w = f.domain().weights();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (w[i] > 0.0) sum += w[i] * std::abs(f[i]);
  }
  return sum;
}

void require_same_grid(const Domain& a, const Domain& b, const char* what) {
  if (&a == &b) return;
  bool same = a.dimension() == b.dimension() && a.node_count() == b.node_count() &&
              a.cell_count() == b.cell_count();
  if (same) {
    for (int i = 0; i < a.dimension() && same; ++i) same = a.cells(i) == b.cells(i);
  }
  same = same && (a.lower() - b.lower()).norm() <= 1e-12 * (1.0 + a.lower().norm()) &&
         (a.upper() - b.upper()).norm() <= 1e-12 * (1.0 + a.upper().norm()) &&
         a.weights() == b.weights();
  if (!same) throw InputError(std::string(what) + ": fields live on different grids");
}

IntegrabilityReport integrability(const Eigen::VectorXd& magnitude, const Domain& d, double f_l1,
                                  double extra_factor, const std::vector<double>& deltas,
                                  const WulffGeometry& geom, double slack) {
  const int n = geom.dimension();
  if (!(f_l1 > 0.0)) throw InputError("integrability check: |f|_1 must be positive");
  IntegrabilityReport rep;
  rep.beta = beta_constant(n, geom.k);
  rep.f_l1 = f_l1;
  rep.measure = d.measure();
  rep.slack = slack;
  const double scale = extra_factor / std::pow(f_l1, 1.0 / (n - 1));
  const auto& w = d.weights();
  for (double delta : deltas) {
    if (!(delta > 0.0 && delta < rep.beta)) {
      throw InputError("integrability check: delta must lie in (0, beta_N)");
    }
    IntegrabilityRow row;
    row.delta = delta;
    const double c = (rep.beta - delta) * scale;
    for (Eigen::Index i = 0; i < magnitude.size(); ++i) {
      if (w[i] > 0.0) row.lhs += w[i] * std::exp(c * magnitude[i]);
    }
    row.rhs = rep.beta / delta * rep.measure;
    row.ratio = row.lhs / row.rhs;
    row.violated = !(row.lhs <= row.rhs * (1.0 + slack));
    rep.rows.push_back(row);
  }
  return rep;
}

// Weight of node i in the ball W_r(p), cut linearly across the boundary.
double ball_fraction(const Domain& d, const FinslerGauge& gauge, const Vec& y, double r) {
  if (y.isZero(0)) return 1.0;
  const double f0 = dual_norm(gauge, y);
  const Vec g = dual_norm_grad(gauge, y);
  const double width = d.spacing().cwiseProduct(g).norm();
  return std::clamp((r - f0) / width + 0.5, 0.0, 1.0);
}

}  // namespace

double IntegrabilityReport::worst_ratio() const {
  double w = 0.0;
  for (const auto& r : rows) w = std::max(w, r.ratio);
  return w;
}

bool IntegrabilityReport::passed() const {
  return std::none_of(rows.begin(), rows.end(), [](const auto& r) { return r.violated; });
}

nlohmann::json IntegrabilityReport::to_json() const {
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& r : rows) {
    rj.push_back({{"delta", r.delta}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"ratio", r.ratio},
                  {"violated", r.violated}});
  }
  return {{"rows", rj},          {"beta", beta},   {"f_l1", f_l1},
          {"measure", measure},  {"d0", d0},       {"slack", slack},
          {"worst_ratio", worst_ratio()}, {"passed", passed()}};
}

void IntegrabilityReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out.precision(17);
  out << "delta,lhs,rhs,ratio\n";
  for (const auto& r : rows) out << r.delta << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio << '\n';
}

IntegrabilityReport thm11_check(const ScalarField& u, const ScalarField& f,
                                const std::vector<double>& deltas, const WulffGeometry& geom,
                                double slack) {
  require_same_grid(u.domain(), f.domain(), "thm11_check");
  return integrability(u.values().cwiseAbs(), u.domain(), lumped_l1(f), 1.0, deltas, geom, slack);
}

IntegrabilityReport thm12_check(const ScalarField& u, const ScalarField& v, const ScalarField& f,
                                const std::vector<double>& deltas, const WulffGeometry& geom,
                                double d0, double slack) {
  require_same_grid(u.domain(), f.domain(), "thm12_check");
  require_same_grid(u.domain(), v.domain(), "thm12_check");
  if (!(d0 > 0.0)) throw InputError("thm12_check: d0 must be positive");
  const int n = geom.dimension();
  auto rep = integrability((u.values() - v.values()).cwiseAbs(), u.domain(), lumped_l1(f),
                           std::pow(d0, 1.0 / (n - 1)), deltas, geom, slack);
  rep.d0 = d0;
  return rep;
}

std::vector<double> delta_grid(const WulffGeometry& geom, const std::vector<double>& fractions) {
  const double beta = beta_constant(geom.dimension(), geom.k);
  std::vector<double> out;
  for (double t : fractions) out.push_back(t * beta);
  return out;
}

double local_mass(const ScalarField& density, const Vec& center, double radius,
                  const FinslerGauge& gauge) {
  const Domain& d = density.domain();
  if (center.size() != d.dimension()) throw InputError("local_mass: center has the wrong dimension");
  if (!(radius > 0.0)) throw InputError("local_mass: radius must be positive");
  const auto& w = d.weights();
  // Only nodes in the bounding box of the ball (plus one cell) can contribute.
  const Vec reach = radius * wulff_extent(gauge) + d.spacing();
  std::array<int, kMaxDim> lo{}, hi{};
  for (int a = 0; a < d.dimension(); ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((center[a] - reach[a] - d.lower()[a]) / d.spacing()[a])));
    hi[a] = std::min(d.cells(a),
                     static_cast<int>(std::ceil((center[a] + reach[a] - d.lower()[a]) / d.spacing()[a])));
    if (lo[a] > hi[a]) return 0.0;
  }
  double sum = 0.0;
  std::array<int, kMaxDim> idx = lo;
  while (true) {
    const Eigen::Index i = d.node_index(idx);
    if (w[i] > 0.0) {
      const double frac = ball_fraction(d, gauge, Vec(d.node_position(i) - center), radius);
      if (frac > 0.0) sum += frac * w[i] * density[i];
    }
    int a = 0;
    for (; a < d.dimension(); ++a) {
      if (++idx[a] <= hi[a]) break;
      idx[a] = lo[a];
    }
    if (a == d.dimension()) break;
  }
  return sum;
}

// ---------------------------------------------------------------------------

std::string to_string(Trichotomy label) {
  switch (label) {
    case Trichotomy::bounded:
      return "bounded";
    case Trichotomy::uniform_minus_infinity:
      return "uniform-minus-infinity";
    case Trichotomy::concentration:
      return "concentration";
  }
  return "unknown";
}

double concentration_threshold(const WulffGeometry& geom, double q_conjugate, double d0) {
  const int n = geom.dimension();
  if (!(q_conjugate > 1.0)) throw InputError("concentration threshold: q' must exceed 1");
  return std::pow(beta_constant(n, geom.k) / q_conjugate, n - 1) * d0;
}

nlohmann::json BlowupReport::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"position", std::vector<double>(p.position.data(), p.position.data() + p.position.size())},
                   {"growth", p.growth},
                   {"alpha", p.alpha},
                   {"radii", p.schedule.radii},
                   {"masses", p.schedule.masses},
                   {"stabilized", p.schedule.stabilized}});
  }
  return {{"label", to_string(label)}, {"points", pts},          {"gamma", gamma},
          {"q", q},                    {"q_conjugate", q_conjugate}, {"d0", d0},
          {"beta", beta},              {"max_values", max_values}, {"total_masses", total_masses}};
}

void BlowupReport::write_mass_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out.precision(17);
  out << "radius,mass,point\n";
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& s = points[p].schedule;
    for (std::size_t j = 0; j < s.radii.size(); ++j) out << s.radii[j] << ',' << s.masses[j] << ',' << p << '\n';
  }
}

namespace {

ScalarField density_of(const SequenceMember& m) {
  Eigen::VectorXd rho(m.u.size());
  const auto& w = m.u.domain().weights();
  for (Eigen::Index i = 0; i < rho.size(); ++i) rho[i] = w[i] > 0.0 ? m.V[i] * std::exp(m.u[i]) : 0.0;
  return ScalarField(m.u.domain_ptr(), std::move(rho));
}

double max_active(const ScalarField& u) {
  const auto& w = u.domain().weights();
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (w[i] > 0.0) m = std::max(m, u[i]);
  }
  return m;
}

// Nodes within the stencil box [idx - 1, idx + 1] with positive weight.
template <typename F>
void for_each_neighbour(const Domain& d, Eigen::Index node, F&& f) {
  const auto base = d.node_multi_index(node);
  const int n = d.dimension();
  int count = 1;
  for (int a = 0; a < n; ++a) count *= 3;
  for (int c = 0; c < count; ++c) {
    auto idx = base;
    int rem = c;
    bool ok = true, self = true;
    for (int a = 0; a < n; ++a) {
      const int off = rem % 3 - 1;
      rem /= 3;
      idx[a] += off;
      if (off != 0) self = false;
      if (idx[a] < 0 || idx[a] > d.cells(a)) ok = false;
    }
    if (!ok || self) continue;
    const Eigen::Index j = d.node_index(idx);
    if (d.weights()[j] > 0.0) f(j);
  }
}

MassSchedule mass_schedule(const ScalarField& density, const Vec& p, double r_max, double r_min,
                           double stabilization, const FinslerGauge& gauge) {
  MassSchedule s;
  for (double r = r_max; r >= r_min * (1.0 - 1e-12); r *= 0.5) {
    s.radii.push_back(r);
    s.masses.push_back(local_mass(density, p, r, gauge));
  }
  // First pair within the stabilization tolerance; failing that, the pair
  // with the smallest relative change. The outer radius of the pair is taken.
  s.chosen = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < s.radii.size(); ++j) {
    const double change = std::abs(s.masses[j] - s.masses[j + 1]) / std::abs(s.masses[j]);
    if (change <= stabilization) {
      s.stabilized = true;
      s.chosen = j;
      break;
    }
    if (change < best) {
      best = change;
      s.chosen = j;
    }
  }
  return s;
}

}  // namespace

BlowupReport detect_blowup_set(const std::vector<SequenceMember>& sequence, const WulffGeometry& geom,
                               double q_conjugate, const BlowupConfig& config) {
  if (sequence.size() < 3) throw InputError("detect_blowup_set: need at least 3 members");
  const Domain& d = sequence.front().u.domain();
  if (d.dimension() != geom.dimension()) throw InputError("detect_blowup_set: dimension mismatch");
  for (const auto& m : sequence) {
    require_same_grid(d, m.u.domain(), "detect_blowup_set");
    require_same_grid(d, m.V.domain(), "detect_blowup_set");
  }

  BlowupReport rep;
  const int n = geom.dimension();
  rep.q_conjugate = q_conjugate;
  rep.q = q_conjugate / (q_conjugate - 1.0);
  rep.beta = beta_constant(n, geom.k);
  if (config.d0 > 0.0) {
    rep.d0 = config.d0;
  } else {
    D0SearchConfig dc;
    dc.samples = 20000;
    dc.polish_starts = 10;
    rep.d0 = estimate_d0(geom.gauge, dc).d0_estimate;
  }
  rep.gamma = concentration_threshold(geom, q_conjugate, rep.d0);

  std::vector<ScalarField> densities;
  for (const auto& m : sequence) {
    rep.max_values.push_back(max_active(m.u));
    densities.push_back(density_of(m));
    rep.total_masses.push_back(integrate(densities.back()));
  }

  const double r_max =
      config.r_max > 0.0 ? config.r_max : 0.5 * (0.5 * (d.upper() - d.lower())).minCoeff();
  const double r_min = config.r_min > 0.0 ? config.r_min : 4.0 * d.h();
  if (!(r_min <= r_max)) throw InputError("detect_blowup_set: r_min exceeds r_max");

  const ScalarField& first = sequence.front().u;
  const ScalarField& last = sequence.back().u;
  const auto& w = d.weights();

  // Local maxima of the last member whose pointwise growth already passes the
  // threshold; the growth of the local max is at least the pointwise one.
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index i = 0; i < last.size(); ++i) {
    if (!(w[i] > 0.0) || last[i] - first[i] < config.growth_threshold) continue;
    bool is_max = true;
    for_each_neighbour(d, i, [&](Eigen::Index j) {
      if (last[j] > last[i] || (last[j] == last[i] && j < i)) is_max = false;
    });
    if (is_max) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](Eigen::Index a, Eigen::Index b) { return last[a] > last[b]; });

  const ScalarField& rho = densities.back();
  const double gate = rep.gamma * (1.0 - config.slack);
  for (Eigen::Index i : candidates) {
    const Vec p = d.node_position(i);
    bool merged = false;
    for (const auto& q : rep.points) {
      if (dual_norm(geom.gauge, Vec(p - q.position)) < 2.0 * r_min) merged = true;
    }
    if (merged) continue;
    // Growth of the local maximum: last local max minus the first member's
    // max over W_{r_max}(p).
    double first_local = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < first.size(); ++j) {
      if (w[j] > 0.0 && dual_norm(geom.gauge, Vec(d.node_position(j) - p)) <= r_max) {
        first_local = std::max(first_local, first[j]);
      }
    }
    const double growth = last[i] - first_local;
    if (growth < config.growth_threshold) continue;
    BlowupPoint bp;
    bp.position = p;
    bp.growth = growth;
    bp.schedule = mass_schedule(rho, p, r_max, r_min, config.stabilization, geom.gauge);
    if (bp.schedule.masses.back() < gate) continue;
    bp.alpha = bp.schedule.masses[bp.schedule.chosen];
    rep.points.push_back(std::move(bp));
  }

  if (!rep.points.empty()) {
    rep.label = Trichotomy::concentration;
  } else {
    bool monotone = true;
    for (std::size_t j = 1; j < rep.max_values.size(); ++j) {
      if (rep.max_values[j] > rep.max_values[j - 1]) monotone = false;
    }
    rep.label = monotone && rep.max_values.front() - rep.max_values.back() >= config.decay_threshold
                    ? Trichotomy::uniform_minus_infinity
                    : Trichotomy::bounded;
  }
  return rep;
}

Trichotomy classify_trichotomy(const std::vector<SequenceMember>& sequence, const WulffGeometry& geom,
                               double q_conjugate, const BlowupConfig& config) {
  return detect_blowup_set(sequence, geom, q_conjugate, config).label;
}

// ---------------------------------------------------------------------------

nlohmann::json PohozaevBreakdown::to_json() const {
  return {{"radius", radius},
          {"flux_term", flux_term},
          {"energy_term", energy_term},
          {"boundary_source_term", boundary_source_term},
          {"mass_term", mass_term},
          {"gradient_term", gradient_term},
          {"left", left()},
          {"right", right()},
          {"residual", residual()},
          {"quadrature_error", quadrature_error}};
}

namespace {

struct BoundaryTerms {
  double flux = 0.0, energy = 0.0, source = 0.0, error = 0.0;
};

// The three boundary integrals, each by Wulff-sphere quadrature. When the
// integrand is only piecewise smooth the sphere rule may stall; the last
// estimate is kept and its change reported.
BoundaryTerms boundary_terms(const std::function<double(const Vec&)>& v,
                             const std::function<Vec(const Vec&)>& grad_v,
                             const std::function<double(const Vec&)>& Z, const Vec& center,
                             double radius, const WulffGeometry& geom, double tol) {
  const int n = geom.dimension();
  const auto& gauge = geom.gauge;
  BoundaryTerms out;
  auto run = [&](const std::function<double(const WulffBoundaryPoint&)>& g) {
    try {
      return wulff_boundary_integral(geom, radius, center, g, tol);
    } catch (const QuadratureError& e) {
      out.error = std::max(out.error, e.achieved_error());
      return e.estimate();
    }
  };
  out.flux = run([&](const WulffBoundaryPoint& p) {
    const Vec gv = grad_v(p.x);
    return -flux(gauge, gv).dot(p.normal) * p.offset.dot(gv);
  });
  out.energy = run([&](const WulffBoundaryPoint& p) {
    return std::pow(norm(gauge, grad_v(p.x)), n) / n * p.offset.dot(p.normal);
  });
  if (Z) {
    out.source = run([&](const WulffBoundaryPoint& p) {
      return Z(p.x) * std::exp(v(p.x)) * p.offset.dot(p.normal);
    });
  }
  return out;
}

}  // namespace

PohozaevBreakdown pohozaev_terms(const PohozaevInput& input, const Vec& center, double radius,
                                 const WulffGeometry& geom, double tol) {
  if (!input.v || !input.grad_v) throw InputError("pohozaev_terms: v and grad v are required");
  if (!(radius > 0.0)) throw InputError("pohozaev_terms: radius must be positive");
  const int n = geom.dimension();
  PohozaevBreakdown out;
  out.radius = radius;
  const auto b = boundary_terms(input.v, input.grad_v, input.Z, center, radius, geom, tol);
  out.flux_term = b.flux;
  out.energy_term = b.energy;
  out.boundary_source_term = b.source;
  out.quadrature_error = b.error;
  if (input.Z) {
    out.mass_term = -n * wulff_ball_integral(
                             geom, radius, center,
                             [&](const Vec& x) { return input.Z(x) * std::exp(input.v(x)); }, tol);
  }
  if (input.grad_Z) {
    out.gradient_term = -wulff_ball_integral(
        geom, radius, center,
        [&](const Vec& x) { return Vec(x - center).dot(input.grad_Z(x)) * std::exp(input.v(x)); }, tol);
  }
  return out;
}

std::vector<Vec> nodal_gradient(const ScalarField& field) {
  const Domain& d = field.domain();
  const int n = d.dimension();
  const auto& w = d.weights();
  std::vector<Vec> out(field.size(), Vec::Zero(n));
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    const auto idx = d.node_multi_index(i);
    for (int a = 0; a < n; ++a) {
      auto lo = idx, hi = idx;
      --lo[a];
      ++hi[a];
      const bool has_lo = lo[a] >= 0 && w[d.node_index(lo)] > 0.0;
      const bool has_hi = hi[a] <= d.cells(a) && w[d.node_index(hi)] > 0.0;
      const double h = d.spacing()[a];
      if (has_lo && has_hi) {
        out[i][a] = (field[d.node_index(hi)] - field[d.node_index(lo)]) / (2.0 * h);
      } else if (has_hi) {
        out[i][a] = (field[d.node_index(hi)] - field[i]) / h;
      } else if (has_lo) {
        out[i][a] = (field[i] - field[d.node_index(lo)]) / h;
      }
    }
  }
  return out;
}

PohozaevBreakdown pohozaev_terms(const ScalarField& v, const ScalarField& Z, const Vec& center,
                                 double radius, const WulffGeometry& geom) {
  const Domain& d = v.domain();
  require_same_grid(d, Z.domain(), "pohozaev_terms");
  const int n = geom.dimension();
  if (d.dimension() != n) throw InputError("pohozaev_terms: dimension mismatch");
  if (radius < 4.0 * d.h()) {
    throw InputError("pohozaev_terms: radius " + std::to_string(radius) + " is below 4h = " +
                     std::to_string(4.0 * d.h()) + "; the boundary layer is under-resolved");
  }
  const Vec reach = radius * wulff_extent(geom.gauge);
  if (((center - reach).array() < d.lower().array()).any() ||
      ((center + reach).array() > d.upper().array()).any()) {
    throw InputError("pohozaev_terms: the Wulff ball leaves the grid");
  }

  // Gradient components as nodal fields so the P1 interpolant applies.
  auto component_fields = [&](const ScalarField& f) {
    const auto g = nodal_gradient(f);
    std::vector<ScalarField> comps;
    for (int a = 0; a < n; ++a) {
      Eigen::VectorXd c(f.size());
      for (Eigen::Index i = 0; i < f.size(); ++i) c[i] = g[i][a];
      comps.emplace_back(f.domain_ptr(), std::move(c));
    }
    return comps;
  };
  const auto gv = component_fields(v);
  const auto gz = component_fields(Z);
  auto grad_at = [&](const std::vector<ScalarField>& comps, const Vec& x) {
    Vec out(n);
    for (int a = 0; a < n; ++a) out[a] = interpolate(comps[a], x);
    return out;
  };

  PohozaevBreakdown out;
  out.radius = radius;
  // The interpolants are only piecewise smooth; ask the sphere rule for what
  // the O(h^2) data can deliver.
  const double tol = n == 2 ? 1e-7 : 1e-5;
  const auto b = boundary_terms([&](const Vec& x) { return interpolate(v, x); },
                                [&](const Vec& x) { return grad_at(gv, x); },
                                [&](const Vec& x) { return interpolate(Z, x); }, center, radius, geom, tol);
  out.flux_term = b.flux;
  out.energy_term = b.energy;
  out.boundary_source_term = b.source;
  out.quadrature_error = b.error;

  const auto& w = d.weights();
  const auto z_grad = nodal_gradient(Z);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    const Vec y = d.node_position(i) - center;
    const double frac = ball_fraction(d, geom.gauge, y, radius);
    if (frac <= 0.0) continue;
    const double ev = std::exp(v[i]);
    out.mass_term -= n * frac * w[i] * Z[i] * ev;
    out.gradient_term -= frac * w[i] * y.dot(z_grad[i]) * ev;
  }
  return out;
}

double pohozaev_green_left(const WulffGeometry& geom, double alpha) {
  const int n = geom.dimension();
  return -(n - 1) * geom.k * std::pow(alpha / (n * geom.k), n / (n - 1.0));
}

double alpha_from_pohozaev_left(const WulffGeometry& geom, double left) {
  const int n = geom.dimension();
  if (!(left < 0.0)) throw InputError("alpha_from_pohozaev_left: the left side must be negative");
  return n * geom.k * std::pow(-left / ((n - 1) * geom.k), (n - 1.0) / n);
}

double richardson_limit(const std::vector<double>& radii, const std::vector<double>& values) {
  if (radii.size() != values.size() || radii.size() < 2) {
    throw InputError("richardson_limit: need at least two matching samples");
  }
  std::vector<std::size_t> order(radii.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return radii[a] < radii[b]; });
  const double r1 = radii[order[0]], r2 = radii[order[1]];
  if (!(r1 < r2)) throw InputError("richardson_limit: radii must differ");
  const double v1 = values[order[0]], v2 = values[order[1]];
  return (r2 * v1 - r1 * v2) / (r2 - r1);
}

// ---------------------------------------------------------------------------

nlohmann::json MassExtractReport::to_json() const {
  return {{"point", std::vector<double>(point.data(), point.data() + point.size())},
          {"alpha_local_mass", alpha_local_mass},
          {"alpha_pohozaev", alpha_pohozaev},
          {"alpha_formula", alpha_formula},
          {"alpha_bubble", alpha_bubble},
          {"gap_local_mass", gap_local_mass},
          {"gap_pohozaev", gap_pohozaev},
          {"pohozaev", pohozaev.to_json()},
          {"detection", detection.to_json()}};
}

MassExtractReport blowup_mass_extract(const std::vector<SequenceMember>& sequence,
                                      const WulffGeometry& geom, double q_conjugate,
                                      const BlowupConfig& config) {
  MassExtractReport rep;
  rep.detection = detect_blowup_set(sequence, geom, q_conjugate, config);
  if (rep.detection.label != Trichotomy::concentration || rep.detection.points.size() != 1) {
    throw InputError("blowup_mass_extract: need exactly one concentration point, found " +
                     std::to_string(rep.detection.points.size()));
  }
  const int n = geom.dimension();
  const auto& bp = rep.detection.points.front();
  rep.point = bp.position;
  rep.alpha_local_mass = bp.alpha;
  rep.alpha_formula = alpha_formula(n, geom.k);
  rep.alpha_bubble = alpha_pohozaev_balance(n, geom.k);

  const auto& last = sequence.back();
  const double radius = std::max(bp.schedule.radii[bp.schedule.chosen], 4.0 * last.u.domain().h());
  rep.pohozaev = pohozaev_terms(last.u, last.V, bp.position, radius, geom);
  rep.alpha_pohozaev = alpha_from_pohozaev_left(geom, rep.pohozaev.left());
  rep.gap_local_mass = (rep.alpha_local_mass - rep.alpha_formula) / rep.alpha_formula;
  rep.gap_pohozaev = (rep.alpha_pohozaev - rep.alpha_formula) / rep.alpha_formula;
  return rep;
}

std::vector<SequenceMember> bubble_sequence(const DomainPtr& domain, const WulffGeometry& geom,
                                            double v0, const std::vector<double>& lambdas,
                                            const std::vector<Vec>& centers) {
  if (centers.empty()) throw InputError("bubble_sequence: need at least one center");
  std::vector<SequenceMember> out;
  for (double lambda : lambdas) {
    std::vector<Bubble> bubbles;
    for (const auto& c : centers) bubbles.emplace_back(geom, v0, lambda, c);
    auto u = ScalarField::from_function(domain, [&](const Vec& x) {
      if (bubbles.size() == 1) return bubbles.front().value(x);
      // log-sum-exp
      double top = -std::numeric_limits<double>::infinity();
      std::vector<double> vals;
      for (const auto& b : bubbles) {
        vals.push_back(b.value(x));
        top = std::max(top, vals.back());
      }
      double s = 0.0;
      for (double v : vals) s += std::exp(v - top);
      return top + std::log(s);
    });
    out.push_back({std::move(u), ScalarField::constant(domain, v0)});
  }
  return out;
}

}  // namespace fl
