#include "finsler_liouville/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace fl {

RegularizedIntegrand regularized_integrand(const FinslerGauge& gauge, const Vec& xi, double eps) {
  const int n = gauge.dimension();
  const double f = norm(gauge, xi);
  const double fe2 = f * f + eps * eps;
  RegularizedIntegrand out;
  if (n == 2) {
    out.value = 0.5 * f * f;
  } else {
    out.value = (std::pow(fe2, 0.5 * n) - std::pow(eps, n)) / n;
  }
  if (f == 0.0) {
    out.flux = Vec::Zero(n);
  } else {
    out.flux = std::pow(fe2, 0.5 * (n - 2)) * f * norm_grad(gauge, xi);
  }
  return out;
}

Mat regularized_hessian(const FinslerGauge& gauge, const Vec& xi, double eps) {
  const int n = gauge.dimension();
  const bool at_origin = xi.isZero(0);
  const Vec dir = at_origin ? Vec(Vec::Constant(n, 1.0 / std::sqrt(double(n)))) : xi;
  const double f = at_origin ? 0.0 : norm(gauge, xi);
  const Vec grad = norm_grad(gauge, dir);
  // Hess(F^2/2) is 0-homogeneous.
  const Mat half_sq = grad * grad.transpose() + norm(gauge, dir) * norm_hess(gauge, dir);
  if (n == 2) return half_sq;
  const double fe2 = f * f + eps * eps;
  Mat h = std::pow(fe2, 0.5 * (n - 2)) * half_sq;
  if (f > 0.0) {
    const Vec fg = f * grad;
    h += (n - 2) * std::pow(fe2, 0.5 * (n - 4)) * (fg * fg.transpose());
  }
  return h;
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// G_i(u) = linear_i u + load * exponential_i e^u, weighted by w_i.
struct Source {
  Eigen::VectorXd linear;
  Eigen::VectorXd exponential;
  double load = 1.0;

  bool has_exp() const { return exponential.size() > 0; }
};

// Sparsity of the P1 stiffness matrix on free nodes. Node pairs sharing a
// Kuhn simplex differ by a partial sum of path strides; each distinct offset
// gets a slot.
class Pattern {
 public:
  explicit Pattern(const Domain& d) : domain_(d) {
    const int n = d.dimension();
    std::map<Eigen::Index, int> slots;
    local_slot_.resize(d.simplices_per_cell());
    for (int s = 0; s < d.simplices_per_cell(); ++s) {
      const Simplex sx = d.simplex(0, s);
      auto& table = local_slot_[s];
      table.assign((n + 1) * (n + 1), 0);
      for (int a = 0; a <= n; ++a) {
        for (int b = 0; b <= n; ++b) {
          const Eigen::Index off = sx.vertex[b] - sx.vertex[a];
          auto it = slots.find(off);
          if (it == slots.end()) it = slots.emplace(off, static_cast<int>(slots.size())).first;
          table[a * (n + 1) + b] = it->second;
        }
      }
    }
    offsets_.resize(slots.size());
    for (const auto& [off, slot] : slots) offsets_[slot] = off;
    free_index_.assign(d.node_count(), -1);
    for (std::size_t i = 0; i < d.interior_nodes().size(); ++i) {
      free_index_[d.interior_nodes()[i]] = static_cast<Eigen::Index>(i);
    }
  }

  int slot_count() const { return static_cast<int>(offsets_.size()); }
  int slot(int simplex, int a, int b) const {
    return local_slot_[simplex][a * (domain_.dimension() + 1) + b];
  }
  Eigen::Index free_index(Eigen::Index node) const { return free_index_[node]; }
  Eigen::Index free_count() const { return static_cast<Eigen::Index>(domain_.interior_nodes().size()); }

  SpMat build(const Eigen::VectorXd& slot_values, const Eigen::VectorXd& diagonal) const {
    const auto& nodes = domain_.interior_nodes();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nodes.size() * offsets_.size());
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      const Eigen::Index row = static_cast<Eigen::Index>(r);
      for (int s = 0; s < slot_count(); ++s) {
        const Eigen::Index col = free_index_[nodes[r] + offsets_[s]];
        if (col < 0) continue;
        double v = slot_values[row * slot_count() + s];
        if (col == row) v += diagonal[row];
        trip.emplace_back(row, col, v);
      }
    }
    SpMat m(free_count(), free_count());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }

 private:
  const Domain& domain_;
  std::vector<std::vector<int>> local_slot_;
  std::vector<Eigen::Index> offsets_;
  std::vector<Eigen::Index> free_index_;
};

struct Evaluation {
  double energy = 0.0;
  Eigen::VectorXd gradient;  // per node
  double residual = 0.0;     // max over free nodes of |gradient_i| / w_i
};

// Local gradient operator of a simplex: grad u_T = D u_local.
Mat local_gradient_operator(const Domain& d, const Simplex& s) {
  const int n = d.dimension();
  Mat D = Mat::Zero(n, n + 1);
  for (int j = 0; j < n; ++j) {
    const int axis = (*s.path)[j];
    D(axis, j) = -1.0 / d.spacing()[axis];
    D(axis, j + 1) = 1.0 / d.spacing()[axis];
  }
  return D;
}

double source_energy(const Domain& d, const Source& src, const Eigen::VectorXd& u) {
  const auto& w = d.weights();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (w[i] == 0.0) continue;
    double g = src.linear.size() ? src.linear[i] * u[i] : 0.0;
    if (src.has_exp()) g += src.load * src.exponential[i] * std::exp(u[i]);
    sum += w[i] * g;
  }
  return sum;
}

double evaluate_energy(const Domain& d, const FinslerGauge& gauge, double eps, const Source& src,
                       const Eigen::VectorXd& u) {
  double e = 0.0;
  d.for_each_simplex([&](Eigen::Index, const Simplex& s) {
    e += regularized_integrand(gauge, simplex_gradient(d, s, u), eps).value;
  });
  return e * d.simplex_volume() - source_energy(d, src, u);
}

Evaluation evaluate(const Domain& d, const FinslerGauge& gauge, double eps, const Source& src,
                    const Eigen::VectorXd& u, const Pattern* pattern, Eigen::VectorXd* slot_values) {
  const int n = d.dimension();
  Evaluation ev;
  ev.gradient = Eigen::VectorXd::Zero(u.size());
  if (slot_values) slot_values->setZero(pattern->free_count() * pattern->slot_count());
  double e = 0.0;
  const double vol = d.simplex_volume();
  d.for_each_simplex([&](Eigen::Index, const Simplex& s) {
    const Vec g = simplex_gradient(d, s, u);
    const auto integrand = regularized_integrand(gauge, g, eps);
    e += integrand.value;
    const Mat D = local_gradient_operator(d, s);
    const Vec local = vol * (D.transpose() * integrand.flux);
    for (int a = 0; a <= n; ++a) ev.gradient[s.vertex[a]] += local[a];
    if (slot_values) {
      const Mat k = vol * (D.transpose() * regularized_hessian(gauge, g, eps) * D);
      for (int a = 0; a <= n; ++a) {
        const Eigen::Index row = pattern->free_index(s.vertex[a]);
        if (row < 0) continue;
        for (int b = 0; b <= n; ++b) {
          (*slot_values)[row * pattern->slot_count() + pattern->slot(s.index, a, b)] += k(a, b);
        }
      }
    }
  });
  ev.energy = e * vol - source_energy(d, src, u);
  const auto& w = d.weights();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (w[i] == 0.0) continue;
    double s = src.linear.size() ? src.linear[i] : 0.0;
    if (src.has_exp()) s += src.load * src.exponential[i] * std::exp(u[i]);
    ev.gradient[i] -= w[i] * s;
  }
  for (Eigen::Index node : d.interior_nodes()) {
    ev.residual = std::max(ev.residual, std::abs(ev.gradient[node]) / w[node]);
  }
  return ev;
}

enum class NewtonStatus { converged, max_iterations, line_search_failed, linear_solve_failed };

NewtonStatus newton(const Domain& d, const FinslerGauge& gauge, double eps, const Source& src,
                    double tol_abs, const SolverConfig& cfg, const Pattern& pattern,
                    Eigen::VectorXd& u, SolveReport& report) {
  Eigen::VectorXd slots;
  const auto& nodes = d.interior_nodes();
  const Eigen::Index nf = pattern.free_count();
  for (int it = 0; it <= cfg.max_iterations; ++it) {
    Evaluation ev = evaluate(d, gauge, eps, src, u, &pattern, &slots);
    report.residual_norm = ev.residual;
    if (report.energy_history.empty() || it > 0) report.energy_history.push_back(ev.energy);
    if (ev.residual <= tol_abs || nf == 0) return NewtonStatus::converged;
    if (it == cfg.max_iterations) break;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(nf);
    if (src.has_exp()) {
      for (Eigen::Index r = 0; r < nf; ++r) {
        const Eigen::Index node = nodes[r];
        diag[r] = -d.weights()[node] * src.load * src.exponential[node] * std::exp(u[node]);
      }
    }
    const SpMat K = pattern.build(slots, diag);
    Eigen::VectorXd rhs(nf);
    for (Eigen::Index r = 0; r < nf; ++r) rhs[r] = -ev.gradient[nodes[r]];
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(cfg.linear_tol);
    cg.setMaxIterations(cfg.max_linear_iterations);
    cg.compute(K);
    if (cg.info() != Eigen::Success) return NewtonStatus::linear_solve_failed;
    const Eigen::VectorXd step = cg.solve(rhs);
    report.linear_iterations += static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success || !step.allFinite()) return NewtonStatus::linear_solve_failed;
    const double slope = -rhs.dot(step);
    if (!(slope < 0.0)) return NewtonStatus::linear_solve_failed;
    ++report.iterations;
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial = u;
    for (int ls = 0; ls < cfg.max_backtracks; ++ls) {
      for (Eigen::Index r = 0; r < nf; ++r) trial[nodes[r]] = u[nodes[r]] + t * step[r];
      const double e = evaluate_energy(d, gauge, eps, src, trial);
      if (std::isfinite(e)) {
        const bool armijo = e <= ev.energy + cfg.armijo * t * slope;
        // At round-off level the energy cannot resolve progress; accept a step
        // that does not raise it measurably and shrinks the residual.
        const bool flat = std::abs(e - ev.energy) <= 1e-13 * std::max(1.0, std::abs(ev.energy)) &&
                          evaluate(d, gauge, eps, src, trial, nullptr, nullptr).residual < ev.residual;
        if (armijo || flat) {
          accepted = true;
          break;
        }
      }
      t *= cfg.backtrack;
    }
    if (!accepted) return NewtonStatus::line_search_failed;
    u.swap(trial);
  }
  return NewtonStatus::max_iterations;
}

double default_eps(const ScalarField& source, const ScalarField& g) {
  const Domain& d = source.domain();
  const int n = d.dimension();
  const double diam = (d.upper() - d.lower()).norm();
  double fmax = source.max_abs();
  double osc = 0.0;
  const Eigen::VectorXd trace = g.boundary_trace();
  if (trace.size()) osc = trace.maxCoeff() - trace.minCoeff();
  const double scale = std::max(std::pow(fmax * diam, 1.0 / (n - 1)), osc / diam);
  return 1e-6 * (scale > 0.0 ? scale : 1.0);
}

const char* status_text(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::max_iterations: return "maximum Newton iterations reached";
    case NewtonStatus::line_search_failed: return "line search failed; a larger eps may help";
    case NewtonStatus::linear_solve_failed: return "linearised system is not positive definite";
  }
  return "";
}

void check_same_domain(const ScalarField& a, const ScalarField& b) {
  if (a.domain_ptr() != b.domain_ptr() && a.domain().node_count() != b.domain().node_count()) {
    throw InputError("fields live on different domains");
  }
}

}  // namespace

double energy(const ScalarField& u, const ScalarField& f, const FinslerGauge& gauge, double eps) {
  check_same_domain(u, f);
  Source src;
  src.linear = f.values();
  return evaluate_energy(u.domain(), gauge, eps, src, u.values());
}

ScalarField residual(const ScalarField& u, const ScalarField& f, const FinslerGauge& gauge,
                     double eps) {
  check_same_domain(u, f);
  const Domain& d = u.domain();
  Source src;
  src.linear = f.values();
  const Evaluation ev = evaluate(d, gauge, eps, src, u.values(), nullptr, nullptr);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(u.size());
  for (Eigen::Index node : d.interior_nodes()) r[node] = ev.gradient[node] / d.weights()[node];
  return ScalarField(u.domain_ptr(), std::move(r));
}

namespace {

// Newton with optional eps continuation for non-quadratic operators.
NewtonStatus staged_newton(const Domain& d, const FinslerGauge& gauge, double eps,
                           const Source& src, double tol_abs, const SolverConfig& cfg,
                           const Pattern& pattern, Eigen::VectorXd& u, SolveReport& report) {
  if (d.dimension() > 2 && cfg.eps_continuation) {
    std::vector<double> stages;
    for (double e = eps * 1e6; e > eps * 1.5; e /= 10.0) stages.push_back(e);
    for (double e : stages) {
      Eigen::VectorXd trial = u;
      const auto st = newton(d, gauge, e, src, 100.0 * tol_abs, cfg, pattern, trial, report);
      if (st == NewtonStatus::converged) u = trial;
    }
  }
  return newton(d, gauge, eps, src, tol_abs, cfg, pattern, u, report);
}

}  // namespace

std::pair<ScalarField, SolveReport> solve_poisson(const ScalarField& f, const ScalarField& g,
                                                  const FinslerGauge& gauge,
                                                  const SolverConfig& config) {
  check_same_domain(f, g);
  const Domain& d = f.domain();
  if (gauge.dimension() != d.dimension()) throw InputError("gauge and domain dimensions differ");
  SolveReport report;
  report.eps = config.eps >= 0.0 ? config.eps : default_eps(f, g);
  Eigen::VectorXd u = g.values();
  if (f.max_abs() == 0.0 && g.max_abs() == 0.0) {
    report.converged = true;
    report.message = "zero data";
    report.energy_history.push_back(0.0);
    return {ScalarField(f.domain_ptr(), Eigen::VectorXd::Zero(u.size())), report};
  }
  Source src;
  src.linear = f.values();
  const Pattern pattern(d);
  const double tol_abs = config.tol * std::max(1.0, f.max_abs());
  const auto status = staged_newton(d, gauge, report.eps, src, tol_abs, config, pattern, u, report);
  report.converged = status == NewtonStatus::converged;
  report.message = status_text(status);
  if (status == NewtonStatus::line_search_failed || status == NewtonStatus::linear_solve_failed) {
    throw ConvergenceError(std::string("solve_poisson: ") + report.message, report.residual_norm,
                           tol_abs);
  }
  return {ScalarField(f.domain_ptr(), std::move(u)), report};
}

std::pair<ScalarField, SolveReport> solve_liouville(const ScalarField& V, const ScalarField& g,
                                                    const FinslerGauge& gauge,
                                                    const SolverConfig& config) {
  check_same_domain(V, g);
  const Domain& d = V.domain();
  if (gauge.dimension() != d.dimension()) throw InputError("gauge and domain dimensions differ");
  for (Eigen::Index i = 0; i < V.size(); ++i) {
    if (d.kind(i) != NodeKind::outside && V[i] < 0.0) throw InputError("solve_liouville: V must be >= 0");
  }
  if (V.max_abs() == 0.0) {
    auto out = solve_poisson(ScalarField::constant(V.domain_ptr(), 0.0), g, gauge, config);
    out.second.load = 1.0;
    return out;
  }
  SolveReport report;
  report.eps = config.eps >= 0.0 ? config.eps : default_eps(V, g);
  const Pattern pattern(d);
  // Start from the harmonic extension of g.
  Source harmonic;
  harmonic.linear = Eigen::VectorXd::Zero(V.size());
  Eigen::VectorXd u = g.values();
  for (Eigen::Index node : d.interior_nodes()) u[node] = 0.0;
  if (g.max_abs() > 0.0) {
    staged_newton(d, gauge, report.eps, harmonic, config.tol, config, pattern, u, report);
  }
  Source src;
  src.exponential = V.values();
  const int steps = std::max(1, config.continuation_steps);
  double current = 0.0;
  for (int j = 0; j <= steps; ++j) {
    const double target = std::pow(10.0, -3.0 * (1.0 - double(j) / steps));
    double next = target;
    while (true) {
      src.load = next;
      Eigen::VectorXd trial = u;
      const double emax = std::exp(trial.maxCoeff());
      const double tol_abs = config.tol * std::max(1.0, next * V.max_abs() * emax);
      const auto st = staged_newton(d, gauge, report.eps, src, tol_abs, config, pattern, trial, report);
      if (st == NewtonStatus::converged) {
        u.swap(trial);
        current = next;
        if (next >= target) break;
        next = target;
        continue;
      }
      const double base = std::max(current, 1e-300);
      const double half = current > 0.0 ? std::sqrt(base * next) : 0.5 * next;
      if (current > 0.0 && half / current - 1.0 < config.continuation_floor) {
        report.load = current;
        throw ContinuationError("solve_liouville: continuation stalled (" +
                                    std::string(status_text(st)) + ") at load " +
                                    std::to_string(current),
                                current);
      }
      if (current == 0.0 && half < 1e-12) {
        throw ContinuationError("solve_liouville: no solution even for tiny load", 0.0);
      }
      next = half;
    }
  }
  report.load = current;
  report.converged = true;
  report.message = "converged";
  return {ScalarField(V.domain_ptr(), std::move(u)), report};
}

nlohmann::json to_json(const SolveReport& r) {
  return nlohmann::json{{"converged", r.converged},
                        {"iterations", r.iterations},
                        {"linear_iterations", r.linear_iterations},
                        {"residual_norm", r.residual_norm},
                        {"eps", r.eps},
                        {"energy_history", r.energy_history},
                        {"message", r.message},
                        {"load", r.load}};
}

}  // namespace fl
