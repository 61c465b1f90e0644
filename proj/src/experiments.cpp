#include "finsler_liouville/experiments.hpp"

#include "finsler_liouville/blowup.hpp"
#include "finsler_liouville/key_value.hpp"
#include "finsler_liouville/rearrangement.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#ifndef FL_VERSION
#define FL_VERSION "unknown"
#endif

namespace fl {

namespace {

namespace fs = std::filesystem;

const std::vector<ExperimentInfo> kCatalog{
    {"props2_1", "gauge properties: homogeneity, evenness, polarity, inverse gradient map"},
    {"coarea", "co-area identity: total variation vs integral of level-set perimeters"},
    {"isoperimetric", "anisotropic isoperimetric deficit on random sets and the Wulff ball"},
    {"polya_szego", "energy of the convex symmetrization never exceeds the original"},
    {"talenti", "symmetrized solution lies below the solution of the symmetrized problem"},
    {"maxprinciple", "weak maximum principle for -Q_N u <= 0 on random data"},
    {"comparison", "ordered data give ordered solutions"},
    {"mvp", "mean-value property and the gauge condition it needs"},
    {"green", "Green function weak identity and the Pohozaev left side as eps -> 0"},
    {"thm11", "exponential integrability with zero boundary data"},
    {"thm12", "exponential integrability of u minus its harmonic extension"},
    {"thm13", "trichotomy classifier on bounded, decaying and concentrating sequences"},
    {"thm14", "blow-up mass from local mass and Pohozaev vs the closed form"},
    {"d0", "uniform monotonicity constant of the flux map"},
};

const std::vector<std::string> kConfigKeys{"gauge",    "domain",  "cells",       "tol",
                                           "eps",      "deltas",  "eps_list",    "lambdas",
                                           "samples",  "seed",    "q_conjugate", "out"};

void apply_keys(ExperimentConfig& c, const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    if (is_experiment(key)) continue;
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
      throw InputError("config: unknown key '" + key + "'");
    }
    if (key == "gauge") c.gauge = value.get<std::string>();
    if (key == "domain") c.domain = value.get<std::string>();
    if (key == "cells") c.cells = value.get<int>();
    if (key == "tol") c.solver.tol = value.get<double>();
    if (key == "eps") c.solver.eps = value.get<double>();
    if (key == "deltas") c.deltas = value.get<std::vector<double>>();
    if (key == "eps_list") c.eps_list = value.get<std::vector<double>>();
    if (key == "lambdas") c.lambdas = value.get<std::vector<double>>();
    if (key == "samples") c.samples = value.get<int>();
    if (key == "seed") c.seed = value.get<std::uint64_t>();
    if (key == "q_conjugate") c.q_conjugate = value.get<double>();
    if (key == "out") c.out_dir = value.get<std::string>();
  }
}

// ---------------------------------------------------------------------------
// Experiment plumbing

struct Context {
  const ExperimentConfig& config;
  FinslerGauge gauge;
  WulffGeometry geom;
  std::mt19937_64 rng;
  nlohmann::json achieved = nlohmann::json::object();
  nlohmann::json budget = nlohmann::json::object();
  std::vector<std::string> files;
  bool passed = true;

  explicit Context(const ExperimentConfig& c)
      : config(c), gauge(parse_gauge_spec(c.gauge)), geom(WulffGeometry::from_gauge(gauge)), rng(c.seed) {}

  int dim() const { return gauge.dimension(); }
  int samples(int fallback) const { return config.samples > 0 ? config.samples : fallback; }
  int cells(int fallback) const { return config.cells > 0 ? config.cells : fallback; }

  DomainPtr domain(const std::function<DomainPtr()>& fallback) const {
    return config.domain.empty() ? fallback() : parse_domain_spec(read_spec_text(config.domain), geom);
  }
  DomainPtr unit_box(int fallback_cells) const {
    return domain([&] { return Domain::box(Vec::Zero(dim()), Vec::Ones(dim()), cells(fallback_cells)); });
  }

  /// Records an achieved value against an upper budget.
  void check_max(const std::string& name, double value, double limit) {
    achieved[name] = value;
    budget[name] = {{"max", limit}};
    if (!(value <= limit)) passed = false;
  }
  void check_min(const std::string& name, double value, double limit) {
    achieved[name] = value;
    budget[name] = {{"min", limit}};
    if (!(value >= limit)) passed = false;
  }
  void check(const std::string& name, bool ok) {
    achieved[name] = ok;
    budget[name] = {{"equals", true}};
    if (!ok) passed = false;
  }

  std::ofstream csv(const std::string& name, const std::string& header) {
    const auto path = fs::path(config.out_dir) / name;
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    out << header << '\n';
    files.push_back(name);
    return out;
  }
};

// Smooth random functions: a few plane waves with normal wave vectors.
struct Waves {
  std::vector<std::pair<Vec, double>> modes;
  double operator()(const Vec& x) const {
    double s = 0.0;
    for (const auto& [k, c] : modes) s += c * std::sin(k.head(x.size()).dot(x) + c);
    return s;
  }
};

Waves random_waves(std::mt19937_64& rng, int dim, int count = 4, double frequency = 2.5) {
  std::normal_distribution<double> nd;
  Waves w;
  for (int m = 0; m < count; ++m) {
    Vec k(dim);
    for (int j = 0; j < dim; ++j) k[j] = frequency * nd(rng);
    w.modes.emplace_back(k, nd(rng));
  }
  return w;
}

/// Positive source exp(waves / 2).
ScalarField random_source(std::mt19937_64& rng, const DomainPtr& d) {
  const auto w = random_waves(rng, d->dimension());
  return ScalarField::from_function(d, [w](const Vec& x) { return std::exp(0.5 * w(x)); });
}

/// (1 + waves / 2) times a bounding-box bubble, zero on the boundary nodes.
ScalarField random_vanishing(std::mt19937_64& rng, const DomainPtr& d) {
  const auto w = random_waves(rng, d->dimension());
  const Vec lo = d->lower(), hi = d->upper();
  auto f = ScalarField::from_function(d, [&](const Vec& x) {
    double cut = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      cut *= 4.0 * (x[j] - lo[j]) * (hi[j] - x[j]) / ((hi[j] - lo[j]) * (hi[j] - lo[j]));
    }
    return (1.0 + 0.5 * w(x)) * cut;
  });
  for (Eigen::Index i : d->boundary_nodes()) f.values()[i] = 0.0;
  return f;
}

double max_gradient(const ScalarField& u) {
  double m = 0.0;
  for (const auto& g : discrete_gradient(u)) m = std::max(m, g.norm());
  return m;
}

std::vector<double> lambda_schedule(const ExperimentConfig& c, double h) {
  if (!c.lambdas.empty()) return c.lambdas;
  std::vector<double> out;
  for (double l = 2.0; l * h <= 0.5 + 1e-12; l *= 2.0) out.push_back(l);
  return out;
}

double q_conjugate_of(const Context& ctx) {
  return ctx.config.q_conjugate > 0.0 ? ctx.config.q_conjugate : ctx.dim() + 1.0;
}

// ---------------------------------------------------------------------------
// Experiments

nlohmann::json run_props(Context& ctx) {
  const auto rep = verify_norm_properties(ctx.gauge, static_cast<std::size_t>(ctx.samples(2000)), ctx.config.seed);
  auto out = ctx.csv("properties.csv", "property,worst_violation");
  for (const auto& c : rep.checks) out << c.property << ',' << c.worst_violation << '\n';
  ctx.check_max("worst_violation", rep.worst(), 1e-6);
  return rep.to_json();
}

nlohmann::json run_coarea(Context& ctx) {
  const auto d = ctx.unit_box(ctx.dim() == 2 ? 128 : 32);
  auto out = ctx.csv("coarea.csv", "field,tv,coarea,residual");
  double worst = 0.0;
  for (int t = 0; t < ctx.samples(10); ++t) {
    const auto u = random_vanishing(ctx.rng, d);
    const double tv = anisotropic_tv(u, ctx.gauge);
    const double ca = coarea_integral(u, ctx.gauge);
    const double res = std::abs(ca - tv) / tv;
    worst = std::max(worst, res);
    out << t << ',' << tv << ',' << ca << ',' << res << '\n';
  }
  ctx.check_max("coarea_residual", worst, 0.05);
  return {{"fields", ctx.samples(10)}, {"h", d->h()}};
}

nlohmann::json run_isoperimetric(Context& ctx) {
  const int n = ctx.dim();
  const double ext = wulff_extent(ctx.gauge).maxCoeff();
  const auto d = ctx.domain([&] {
    return Domain::box(Vec::Constant(n, -ext), Vec::Constant(n, ext), ctx.cells(n == 2 ? 128 : 40));
  });
  const double h = d->h();
  auto deficit = [&](const ScalarField& phi) {
    const double m = superlevel_measure(phi, 0.0);
    const double p = level_set_perimeter(phi, 0.0, ctx.gauge);
    return p / (n * std::pow(ctx.geom.k, 1.0 / n) * std::pow(m, (n - 1.0) / n)) - 1.0;
  };
  auto out = ctx.csv("isoperimetric.csv", "set,deficit");
  double worst = 1e300;
  for (int t = 0; t < ctx.samples(20); ++t) {
    const auto w = random_waves(ctx.rng, n, 4, 3.0);
    const auto phi = ScalarField::from_function(d, [&](const Vec& x) {
      const Vec y = x / ext;
      return 0.3 + 0.1 * w(y) - y.squaredNorm();
    });
    const double def = deficit(phi);
    worst = std::min(worst, def);
    out << t << ',' << def << '\n';
  }
  const auto ball = ScalarField::from_function(d, [&](const Vec& x) { return 0.6 - dual_norm(ctx.gauge, x); });
  const double ball_def = deficit(ball);
  out << "wulff_ball," << ball_def << '\n';
  ctx.check_min("min_deficit_over_h", worst / h, -1.0);
  ctx.check_max("wulff_ball_abs_deficit_over_h", std::abs(ball_def) / h, 1.0);
  return {{"h", h}, {"wulff_ball_deficit", ball_def}, {"min_deficit", worst}};
}

nlohmann::json run_polya_szego(Context& ctx) {
  const int n = ctx.dim();
  const auto d = ctx.unit_box(n == 2 ? 96 : 24);
  auto out = ctx.csv("polya_szego.csv", "field,p,original,symmetrized,ratio");
  double worst = 0.0;
  std::vector<double> ps{2.0};
  if (n != 2) ps.push_back(n);
  for (int t = 0; t < ctx.samples(10); ++t) {
    const auto u = random_vanishing(ctx.rng, d);
    const auto us = convex_symmetrization(u, ctx.geom);
    for (double p : ps) {
      const double a = gradient_power_integral(u, ctx.gauge, p);
      const double b = gradient_power_integral(us, ctx.gauge, p);
      worst = std::max(worst, b / a);
      out << t << ',' << p << ',' << a << ',' << b << ',' << b / a << '\n';
    }
  }
  ctx.check_max("energy_ratio", worst, 1.03);
  return {{"h", d->h()}};
}

nlohmann::json run_talenti(Context& ctx) {
  const auto d = ctx.unit_box(ctx.dim() == 2 ? 48 : 16);
  auto out = ctx.csv("talenti.csv", "problem,max_excess,allowance,u_max,v_max");
  double worst = -1e300;
  nlohmann::json reps = nlohmann::json::array();
  for (int t = 0; t < ctx.samples(3); ++t) {
    const auto f = t == 0 ? ScalarField::constant(d, 1.0) : random_source(ctx.rng, d);
    const auto rep = talenti_compare(f, ctx.gauge, ctx.config.solver);
    const double allowance = 2.0 * rep.h * rep.grad_v_max;
    worst = std::max(worst, rep.max_excess / allowance);
    out << t << ',' << rep.max_excess << ',' << allowance << ',' << rep.u_max << ',' << rep.v_max << '\n';
    reps.push_back(rep.to_json());
  }
  ctx.check_max("excess_over_allowance", worst, 1.0);
  return {{"problems", reps}};
}

nlohmann::json run_principles(Context& ctx, bool comparison) {
  const auto d = ctx.unit_box(ctx.dim() == 2 ? 32 : 12);
  const double h = d->h();
  auto out = comparison ? ctx.csv("comparison.csv", "trial,min_gap,allowance")
                        : ctx.csv("maxprinciple.csv", "trial,excess,allowance");
  double worst = -1e300;
  const auto zero = ScalarField::constant(d, 0.0);
  for (int t = 0; t < ctx.samples(5); ++t) {
    const auto wf = random_waves(ctx.rng, ctx.dim());
    const auto wg = random_waves(ctx.rng, ctx.dim());
    const auto g = ScalarField::from_function(d, [&](const Vec& x) { return 0.5 * wg(x); });
    const auto f_neg = ScalarField::from_function(d, [&](const Vec& x) { return -std::abs(wf(x)); });
    const auto [u1, r1] = solve_poisson(f_neg, g, ctx.gauge, ctx.config.solver);
    if (!r1.converged) throw ConvergenceError("solver: " + r1.message, r1.residual_norm, ctx.config.solver.tol);
    if (!comparison) {
      const double scale = std::max(1.0, u1.max_abs());
      const double allowance = 1e-8 * scale + 2.0 * h * max_gradient(u1);
      const double excess = u1.max_over(NodeKind::interior) - u1.max_over(NodeKind::boundary);
      worst = std::max(worst, excess / allowance);
      out << t << ',' << excess << ',' << allowance << '\n';
      continue;
    }
    // f1 <= f2 and g1 <= g2 give u1 <= u2.
    const auto f2 = ScalarField::from_function(d, [&](const Vec& x) { return std::abs(wf(x)) + 0.3; });
    const auto g2 = g.map([](double v) { return v + 0.1; });
    const auto [u2, r2] = solve_poisson(f2, g2, ctx.gauge, ctx.config.solver);
    if (!r2.converged) throw ConvergenceError("solver: " + r2.message, r2.residual_norm, ctx.config.solver.tol);
    const double scale = std::max({1.0, u1.max_abs(), u2.max_abs()});
    const double allowance = 1e-8 * scale + 2.0 * h * std::max(max_gradient(u1), max_gradient(u2));
    const double gap = (u1.values() - u2.values()).maxCoeff();
    worst = std::max(worst, gap / allowance);
    out << t << ',' << -gap << ',' << allowance << '\n';
  }
  ctx.check_max(comparison ? "violation_over_allowance" : "excess_over_allowance", worst, 1.0);
  return {{"h", h}};
}

nlohmann::json run_mvp(Context& ctx) {
  const int n = ctx.dim();
  const auto cond = check_mvp_condition(ctx.gauge, static_cast<std::size_t>(ctx.samples(2000)), 1e-8, ctx.config.seed);
  nlohmann::json rep{{"condition_holds", cond.holds},
                     {"worst_residual", cond.worst_residual},
                     {"witness_ratio", cond.witness_ratio}};
  auto out = ctx.csv("mvp.csv", "field,radius,sphere_deviation,ball_deviation");
  auto record = [&](const std::string& name, const MeanValueReport& m) {
    for (std::size_t j = 0; j < m.radii.size(); ++j) {
      out << name << ',' << m.radii[j] << ',' << m.sphere_deviation[j] << ',' << m.ball_deviation[j] << '\n';
    }
  };
  const Vec center = Vec::Zero(n);
  const auto radii = default_mvp_radii(1.0);
  Vec a(n);
  for (int i = 0; i < n; ++i) a[i] = 0.3 + 0.2 * i;
  const auto affine = mean_value_check([&](const Vec& x) { return a.dot(x) + 1.0; }, ctx.geom, radii, center, 1e-8);
  record("affine", affine);
  ctx.check_max("affine_deviation", affine.worst, 1e-8);
  const bool euclidean = ctx.gauge.family() == GaugeFamily::euclidean;
  if (euclidean && n == 2) {
    const auto harm = mean_value_check([](const Vec& x) { return x[0] * x[0] - x[1] * x[1] + 0.5 * x[0] * x[1] + 0.3 * x[0]; },
                                       ctx.geom, radii, center, 1e-10);
    record("harmonic", harm);
    ctx.check_max("harmonic_deviation", harm.worst, 1e-8);
  }
  if (euclidean) {
    // The condition holds exactly for the Euclidean plane and fails in R^3.
    ctx.check("condition_verdict_matches", cond.holds == (n == 2));
    if (n == 3) {
      const double r = mvp_condition_ratio(ctx.gauge, make_vec({2, 0, 0}), make_vec({1, 1, 0}));
      rep["ratio_at_x_2e1"] = r;
      ctx.check_max("ratio_at_x_2e1_minus_2", std::abs(r - 2.0), 1e-12);
    }
  }
  return rep;
}

nlohmann::json run_green(Context& ctx) {
  const int n = ctx.dim();
  const double alpha = alpha_formula(n, ctx.geom.k);
  const Vec x0 = Vec::Zero(n);
  const GreenFunction G(ctx.geom, 1.0, alpha, x0);
  // Euclidean radius inside W_1: 1 / max F0 over sampled unit directions.
  std::normal_distribution<double> nd;
  double f0_max = 0.0;
  for (int i = 0; i < 4000; ++i) {
    Vec w(n);
    for (int j = 0; j < n; ++j) w[j] = nd(ctx.rng);
    f0_max = std::max(f0_max, dual_norm(ctx.gauge, Vec(w / w.norm())));
  }
  const double inner = 1.0 / f0_max;
  auto out = ctx.csv("green_weak_identity.csv", "bump_radius,identity,alpha_psi,relative_error");
  double worst = 0.0;
  for (double s : {0.3, 0.5, 0.8}) {
    const double rho = s * inner;
    // psi = exp(-1 / (1 - |x|^2 / rho^2)), psi(0) = 1 / e.
    auto grad_psi = [rho](const Vec& x) -> Vec {
      const double q = x.squaredNorm() / (rho * rho);
      if (q >= 1.0) return Vec::Zero(x.size());
      const double den = 1.0 - q;
      return std::exp(-1.0 / den) * (-2.0 / (rho * rho * den * den)) * x;
    };
    const double lhs = G.weak_identity(grad_psi, 1e-6);
    const double rhs = alpha * std::exp(-1.0);
    const double err = std::abs(lhs - rhs) / rhs;
    worst = std::max(worst, err);
    out << rho << ',' << lhs << ',' << rhs << ',' << err << '\n';
  }
  ctx.check_max("weak_identity_relative_error", worst, 1e-3);

  auto pz = ctx.csv("green_pohozaev_vs_eps.csv", "eps,left,closed_form");
  const double closed = pohozaev_green_left(ctx.geom, alpha);
  std::vector<double> lefts;
  for (double eps : ctx.config.eps_list) {
    const auto b = pohozaev_terms(PohozaevInput{[&](const Vec& x) { return G.value(x); },
                                                [&](const Vec& x) { return G.gradient(x); }, nullptr, nullptr},
                                  x0, eps, ctx.geom);
    lefts.push_back(b.left());
    pz << eps << ',' << b.left() << ',' << closed << '\n';
  }
  const double limit = richardson_limit(ctx.config.eps_list, lefts);
  ctx.check_max("pohozaev_limit_relative_error", std::abs(limit - closed) / std::abs(closed), 0.02);
  return {{"alpha", alpha}, {"pohozaev_limit", limit}, {"pohozaev_closed_form", closed}};
}

nlohmann::json run_integrability(Context& ctx, bool with_trace) {
  const int n = ctx.dim();
  const auto d = with_trace ? ctx.unit_box(n == 2 ? 128 : 24)
                            : ctx.domain([&] { return Domain::wulff_ball(ctx.geom, 1.0, Vec::Zero(n), ctx.cells(n == 2 ? 128 : 24)); });
  const auto deltas = delta_grid(ctx.geom, ctx.config.deltas);
  auto out = ctx.csv(with_trace ? "thm12_lhs_vs_delta.csv" : "lhs_vs_delta.csv", "field,delta,lhs,rhs,ratio");
  double d0 = 1.0;
  if (with_trace) {
    D0SearchConfig dc;
    dc.samples = 20000;
    dc.polish_starts = 10;
    dc.seed = ctx.config.seed;
    d0 = estimate_d0(ctx.gauge, dc).d0_estimate;
  }
  const auto zero = ScalarField::constant(d, 0.0);
  double worst = 0.0;
  nlohmann::json reps = nlohmann::json::array();
  for (int t = 0; t < ctx.samples(3); ++t) {
    const auto f = t == 0 ? ScalarField::constant(d, 1.0) : random_source(ctx.rng, d);
    ScalarField g = zero;
    if (with_trace) {
      const auto w = random_waves(ctx.rng, n);
      g = ScalarField::from_function(d, [&](const Vec& x) { return 0.3 * w(x); });
    }
    const auto [u, ru] = solve_poisson(f, g, ctx.gauge, ctx.config.solver);
    if (!ru.converged) throw ConvergenceError("solver: " + ru.message, ru.residual_norm, ctx.config.solver.tol);
    IntegrabilityReport rep;
    if (with_trace) {
      const auto [v, rv] = solve_poisson(zero, g, ctx.gauge, ctx.config.solver);
      if (!rv.converged) throw ConvergenceError("solver: " + rv.message, rv.residual_norm, ctx.config.solver.tol);
      rep = thm12_check(u, v, f, deltas, ctx.geom, d0);
    } else {
      rep = thm11_check(u, f, deltas, ctx.geom);
    }
    for (const auto& r : rep.rows) out << t << ',' << r.delta << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio << '\n';
    worst = std::max(worst, rep.worst_ratio());
    reps.push_back(rep.to_json());
  }
  ctx.check_max("worst_lhs_over_rhs", worst, 1.05);
  return {{"h", d->h()}, {"d0", d0}, {"fields", reps}};
}

DomainPtr blowup_box(const Context& ctx, double half_width_x, int fallback_cells) {
  const int n = ctx.dim();
  const Vec ext = wulff_extent(ctx.gauge);
  Vec lo = -ext, hi = ext;
  lo[0] *= half_width_x;
  hi[0] *= half_width_x;
  std::vector<int> cells(n, ctx.cells(fallback_cells));
  cells[0] = static_cast<int>(std::lround(cells[0] * half_width_x));
  // Same spacing on every axis up to the extent ratio.
  for (int i = 1; i < n; ++i) cells[i] = static_cast<int>(std::lround(cells[0] / half_width_x * ext[i] / ext[0]));
  return Domain::box(lo, hi, cells);
}

nlohmann::json run_thm13(Context& ctx) {
  const int n = ctx.dim();
  const double qc = q_conjugate_of(ctx);
  BlowupConfig cfg;
  const auto d = blowup_box(ctx, 1.0, n == 2 ? 128 : 64);
  const auto lambdas = lambda_schedule(ctx.config, d->spacing().maxCoeff() / wulff_extent(ctx.gauge).minCoeff());
  auto out = ctx.csv("mass_vs_radius.csv", "sequence,point,radius,mass");
  auto dump = [&](const std::string& name, const BlowupReport& r) {
    for (std::size_t p = 0; p < r.points.size(); ++p) {
      for (std::size_t j = 0; j < r.points[p].schedule.radii.size(); ++j) {
        out << name << ',' << p << ',' << r.points[p].schedule.radii[j] << ',' << r.points[p].schedule.masses[j] << '\n';
      }
    }
  };

  // Bounded: one Liouville solution, repeated. Neither this nor the decaying
  // sequence needs the resolution of the bubbles.
  const auto coarse = blowup_box(ctx, 1.0, n == 2 ? 64 : 16);
  const auto coarse_one = ScalarField::constant(coarse, 1.0);
  const auto [ub, rb] = solve_liouville(coarse_one, ScalarField::constant(coarse, 0.0), ctx.gauge, ctx.config.solver);
  const std::vector<SequenceMember> bounded(4, SequenceMember{ub, coarse_one});
  std::vector<SequenceMember> decaying;
  for (int k = 1; k <= 10; ++k) decaying.push_back({ScalarField::constant(coarse, -k), coarse_one});
  const auto concentrating = bubble_sequence(d, ctx.geom, 1.0, lambdas, {Vec::Zero(n)});

  const auto rb_rep = detect_blowup_set(bounded, ctx.geom, qc, cfg);
  cfg.d0 = rb_rep.d0;  // estimate once
  const auto rd_rep = detect_blowup_set(decaying, ctx.geom, qc, cfg);
  const auto rc_rep = detect_blowup_set(concentrating, ctx.geom, qc, cfg);
  dump("concentration", rc_rep);
  ctx.check("bounded_label", rb_rep.label == Trichotomy::bounded);
  ctx.check("uniform_minus_infinity_label", rd_rep.label == Trichotomy::uniform_minus_infinity);
  ctx.check("concentration_label", rc_rep.label == Trichotomy::concentration && rc_rep.points.size() == 1);

  // Two bubbles on a box twice as long, centred at +-e1 scaled by the extent.
  const auto d2 = blowup_box(ctx, 2.0, n == 2 ? 128 : 64);
  Vec c = Vec::Zero(n);
  c[0] = wulff_extent(ctx.gauge)[0];
  const auto two = detect_blowup_set(bubble_sequence(d2, ctx.geom, 1.0, lambdas, {Vec(-c), c}), ctx.geom, qc, cfg);
  dump("two_bubbles", two);
  ctx.check("two_points", two.points.size() == 2);
  if (two.points.size() == 2 && rc_rep.points.size() == 1) {
    const double single = rc_rep.points[0].alpha;
    double gap = 0.0;
    for (const auto& p : two.points) gap = std::max(gap, std::abs(p.alpha - single) / single);
    ctx.check_max("two_bubble_mass_gap", gap, 0.03);
  }
  return {{"bounded", rb_rep.to_json()},
          {"uniform_minus_infinity", rd_rep.to_json()},
          {"concentration", rc_rep.to_json()},
          {"two_bubbles", two.to_json()},
          {"lambdas", lambdas}};
}

nlohmann::json run_thm14(Context& ctx) {
  const int n = ctx.dim();
  const double qc = q_conjugate_of(ctx);
  const auto d = ctx.domain([&] { return blowup_box(ctx, 1.0, n == 2 ? 256 : 64); });
  const double h = d->spacing().maxCoeff();
  const auto lambdas = lambda_schedule(ctx.config, h / wulff_extent(ctx.gauge).minCoeff());
  const auto seq = bubble_sequence(d, ctx.geom, 1.0, lambdas, {Vec::Zero(n)});
  BlowupConfig cfg;
  const auto rep = blowup_mass_extract(seq, ctx.geom, qc, cfg);

  const double r = rep.detection.points[0].schedule.radii[rep.detection.points[0].schedule.chosen];
  auto ml = ctx.csv("mass_vs_lambda.csv", "lambda,u_max,local_mass,total_mass");
  for (std::size_t j = 0; j < seq.size(); ++j) {
    const auto& m = seq[j];
    Eigen::VectorXd rho = m.u.values().array().exp() * m.V.values().array();
    const ScalarField density(d, std::move(rho));
    ml << lambdas[j] << ',' << m.u.max_abs() << ',' << local_mass(density, Vec::Zero(n), r, ctx.gauge) << ','
       << integrate(density) << '\n';
  }
  auto pz = ctx.csv("pohozaev_vs_eps.csv", "eps,left,right,residual,alpha_estimate");
  const double scale = 0.5 * (d->upper() - d->lower()).minCoeff() / wulff_extent(ctx.gauge).maxCoeff();
  for (double e : ctx.config.eps_list) {
    const double eps = e * 2.0 * scale;
    if (eps < 4.0 * d->h()) continue;
    const auto b = pohozaev_terms(seq.back().u, seq.back().V, Vec::Zero(n), eps, ctx.geom);
    pz << eps << ',' << b.left() << ',' << b.right() << ',' << b.residual() << ','
       << alpha_from_pohozaev_left(ctx.geom, b.left()) << '\n';
  }
  const double budget = n == 2 ? 0.02 : 0.05;
  ctx.check_max("local_mass_gap", std::abs(rep.gap_local_mass), budget);
  ctx.check_max("pohozaev_gap", std::abs(rep.gap_pohozaev), budget);
  auto j = rep.to_json();
  j["lambdas"] = lambdas;
  return j;
}

nlohmann::json run_d0(Context& ctx) {
  D0SearchConfig dc;
  dc.samples = static_cast<std::size_t>(ctx.samples(200000));
  dc.polish_starts = 20;
  dc.seed = ctx.config.seed;
  const auto m = estimate_d0(ctx.gauge, dc);
  auto out = ctx.csv("d0.csv", "d0,component,x,y");
  for (Eigen::Index i = 0; i < m.argmin_x.size(); ++i) {
    out << m.d0_estimate << ',' << i << ',' << m.argmin_x[i] << ',' << m.argmin_y[i] << '\n';
  }
  ctx.check_min("d0", m.d0_estimate, 0.0);
  return {{"d0", m.d0_estimate},
          {"samples", m.sample_count},
          {"beta", beta_constant(ctx.dim(), ctx.geom.k)}};
}

nlohmann::json dispatch(Context& ctx) {
  const auto& id = ctx.config.id;
  if (id == "props2_1") return run_props(ctx);
  if (id == "coarea") return run_coarea(ctx);
  if (id == "isoperimetric") return run_isoperimetric(ctx);
  if (id == "polya_szego") return run_polya_szego(ctx);
  if (id == "talenti") return run_talenti(ctx);
  if (id == "maxprinciple") return run_principles(ctx, false);
  if (id == "comparison") return run_principles(ctx, true);
  if (id == "mvp") return run_mvp(ctx);
  if (id == "green") return run_green(ctx);
  if (id == "thm11") return run_integrability(ctx, false);
  if (id == "thm12") return run_integrability(ctx, true);
  if (id == "thm13") return run_thm13(ctx);
  if (id == "thm14") return run_thm14(ctx);
  if (id == "d0") return run_d0(ctx);
  throw InputError("unknown experiment '" + id + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& id, const nlohmann::json& j) {
  if (!is_experiment(id)) throw InputError("unknown experiment '" + id + "'");
  if (!j.is_object()) throw InputError("config: expected a JSON object");
  ExperimentConfig c;
  c.id = id;
  apply_keys(c, j);
  if (j.contains(id)) {
    if (!j.at(id).is_object()) throw InputError("config: section '" + id + "' must be an object");
    apply_keys(c, j.at(id));
  }
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"id", id},         {"gauge", gauge},       {"domain", domain},
          {"cells", cells},   {"tol", solver.tol},    {"eps", solver.eps},
          {"deltas", deltas}, {"eps_list", eps_list}, {"lambdas", lambdas},
          {"samples", samples}, {"q_conjugate", q_conjugate}, {"seed", seed},
          {"out", out_dir}};
}

std::string config_help() {
  return R"(Config file: one JSON object. Keys (defaults in brackets):
  gauge        gauge description ["family=euclidean; dimension=2"]
  domain       domain description, e.g. "shape=box; lower=0,0; upper=1,1; cells=64"
               [each experiment's own domain]
  cells        cells per axis of the experiment's own domain [experiment default]
  tol          solver residual tolerance [1e-8]
  eps          gauge regularisation, negative = automatic [-1]
  deltas       delta / beta_N for thm11, thm12 [0.25, 0.5, 0.75]
  eps_list     Pohozaev radii relative to the length scale [0.4, 0.2, 0.1]
  lambdas      bubble scales for thm13, thm14 [2^n while lambda h <= 1/2]
  samples      random trials, or samples for props2_1, mvp, d0 [experiment default]
  q_conjugate  q' in the concentration threshold [N + 1]
  seed         random seed [1]
  out          output directory [results]
A key named after an experiment holds an object of overrides for that
experiment only, e.g. {"thm11": {"cells": 256}}.)";
}

const std::vector<ExperimentInfo>& list_experiments() { return kCatalog; }

bool is_experiment(const std::string& id) {
  return std::any_of(kCatalog.begin(), kCatalog.end(), [&](const auto& e) { return e.id == id; });
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (!is_experiment(config.id)) throw InputError("unknown experiment '" + config.id + "'");
  fs::create_directories(config.out_dir);
  ExperimentResult res;
  res.id = config.id;
  nlohmann::json report{{"id", config.id}, {"version", FL_VERSION}, {"config", config.to_json()}};
  try {
    Context ctx(config);
    report["result"] = dispatch(ctx);
    report["achieved"] = ctx.achieved;
    report["budget"] = ctx.budget;
    report["passed"] = ctx.passed;
    res.status = ctx.passed ? 0 : 2;
    res.files = ctx.files;
  } catch (const std::exception& e) {
    report["passed"] = false;
    report["error"] = {{"message", e.what()}};
    res.status = 1;
  }
  report["status"] = res.status;
  const std::string name = config.id + "_report.json";
  std::ofstream out(fs::path(config.out_dir) / name);
  if (!out) throw InputError("cannot write " + (fs::path(config.out_dir) / name).string());
  out << report.dump(2) << '\n';
  res.files.insert(res.files.begin(), name);
  res.report = std::move(report);
  return res;
}

void write_manifest(const std::string& dir, const std::vector<ExperimentConfig>& configs,
                    const std::vector<ExperimentResult>& results) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / "MANIFEST");
  if (!out) throw InputError("cannot write MANIFEST in " + dir);
  out << "finsler-liouville " << FL_VERSION << '\n';
  out << "eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
  out << "nlohmann_json " << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR << '.'
      << NLOHMANN_JSON_VERSION_PATCH << '\n';
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out << "\n[" << r.id << "]\n";
    out << "status " << r.status << (r.status == 0 ? " passed" : r.status == 2 ? " failed" : " error") << '\n';
    if (i < configs.size()) out << "inputs " << configs[i].to_json().dump() << '\n';
    if (r.report.contains("achieved")) {
      for (const auto& [name, value] : r.report["achieved"].items()) {
        out << "achieved " << name << ' ' << value.dump() << " budget " << r.report["budget"][name].dump() << '\n';
      }
    }
    if (r.report.contains("error")) out << "error " << r.report["error"]["message"].get<std::string>() << '\n';
    for (const auto& f : r.files) out << "file " << f << '\n';
  }
}

}  // namespace fl
