#include "finsler_liouville/blowup.hpp"
#include "finsler_liouville/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fl;

namespace {

constexpr double pi = std::numbers::pi;

DomainPtr square(int dim, double half, int cells) {
  return Domain::box(Vec::Constant(dim, -half), Vec::Constant(dim, half), cells);
}

// Closed-form planar bubble mass inside the Euclidean disc of radius r:
// 8 pi (lr)^2 / (1 + (lr)^2), from integrating 8 l^2 / (1 + l^2 s^2)^2 in polar
// coordinates.
double disc_bubble_mass(double lambda, double r) {
  const double s = lambda * lambda * r * r;
  return 8 * pi * s / (1 + s);
}

std::vector<SequenceMember> constant_sequence(const DomainPtr& d, const std::vector<double>& values) {
  std::vector<SequenceMember> seq;
  for (double c : values) seq.push_back({ScalarField::constant(d, c), ScalarField::constant(d, 1.0)});
  return seq;
}

}  // namespace

TEST(Blowup, Thm11UnitDiscConstantSource) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = Domain::wulff_ball(geom, 1.0, Vec::Zero(2), 128);
  const auto f = ScalarField::constant(d, 1.0);
  const auto [u, solve] = solve_poisson(f, ScalarField::constant(d, 0.0), geom.gauge);
  ASSERT_TRUE(solve.converged);
  const double beta = 4 * pi;
  const auto rep = thm11_check(u, f, {beta / 2}, geom);
  ASSERT_EQ(rep.rows.size(), 1u);
  // u = (1 - r^2)/4, |f|_1 = pi, exponent (1 - r^2)/2:
  // \int = 2 pi \int_0^1 r e^{(1-r^2)/2} dr = 2 pi (e^{1/2} - 1).
  EXPECT_NEAR(rep.rows[0].lhs, 2 * pi * (std::exp(0.5) - 1), 0.01 * 2 * pi);
  EXPECT_NEAR(rep.rows[0].rhs, 2 * d->measure(), 1e-12);
  EXPECT_NEAR(rep.rows[0].rhs, 2 * pi, 0.01 * 2 * pi);
  EXPECT_TRUE(rep.passed());
}

TEST(Blowup, Thm11RightSideDecreasesToMeasure) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = square(2, 0.5, 64);
  const auto f = ScalarField::from_function(d, [](const Vec& x) { return 1.0 + x[0]; });
  const auto [u, solve] = solve_poisson(f, ScalarField::constant(d, 0.0), geom.gauge);
  const auto rep = thm11_check(u, f, delta_grid(geom, {0.25, 0.5, 0.75, 0.999}), geom);
  for (std::size_t j = 1; j < rep.rows.size(); ++j) {
    EXPECT_LT(rep.rows[j].rhs, rep.rows[j - 1].rhs);
    EXPECT_LT(rep.rows[j].lhs, rep.rows[j - 1].lhs);
    EXPECT_FALSE(rep.rows[j].violated);
  }
  EXPECT_NEAR(rep.rows.back().rhs, 1.0 / 0.999, 1e-12);
  EXPECT_THROW(thm11_check(u, f, {4 * pi}, geom), InputError);
}

TEST(Blowup, Thm12ReducesToThm11WithZeroTrace) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = Domain::wulff_ball(geom, 1.0, Vec::Zero(2), 64);
  const auto f = ScalarField::constant(d, 1.0);
  const auto zero = ScalarField::constant(d, 0.0);
  const auto [u, s1] = solve_poisson(f, zero, geom.gauge);
  const auto [v, s2] = solve_poisson(zero, zero, geom.gauge);
  const auto deltas = delta_grid(geom, {0.25, 0.5, 0.75});
  const auto a = thm11_check(u, f, deltas, geom);
  const auto b = thm12_check(u, v, f, deltas, geom, 1.0);
  for (std::size_t j = 0; j < deltas.size(); ++j) EXPECT_NEAR(a.rows[j].lhs, b.rows[j].lhs, 1e-12);
}

TEST(Blowup, Thm12LeftSideIsScaleInvariant) {
  // u - v scales like t^{1/(N-1)} under f -> t f, and so does |f|_1^{1/(N-1)}:
  // the left side cannot tend to |Omega| as f -> 0.
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = square(2, 1.0, 64);
  const auto g = ScalarField::from_function(d, [](const Vec& x) { return 0.3 * x[0] * x[1] + 0.1; });
  const auto [v, s0] = solve_poisson(ScalarField::constant(d, 0.0), g, geom.gauge);
  const auto deltas = delta_grid(geom, {0.25, 0.5});
  std::vector<IntegrabilityReport> reps;
  for (double t : {1.0, 1e-6}) {
    const auto f = ScalarField::from_function(d, [&](const Vec& x) { return t * (1.0 + x[0] * x[0]); });
    const auto [u, s] = solve_poisson(f, g, geom.gauge);
    reps.push_back(thm12_check(u, v, f, deltas, geom, 1.0));
    EXPECT_TRUE(reps.back().passed());
  }
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    EXPECT_NEAR(reps[0].rows[j].lhs, reps[1].rows[j].lhs, 1e-6 * reps[0].rows[j].lhs);
    EXPECT_GT(reps[1].rows[j].lhs, 1.1 * d->measure());
  }
}

TEST(Blowup, LocalMassOfConstantsIsBallVolume) {
  for (const auto& g : {FinslerGauge::euclidean(2), FinslerGauge::diagonal(make_vec({1, 4}))}) {
    const auto geom = WulffGeometry::from_gauge(g);
    double errs[2];
    int k = 0;
    for (int n : {64, 128}) {
      const auto d = square(2, 1.0, n);
      const auto one = ScalarField::constant(d, 1.0);
      errs[k++] = std::abs(local_mass(one, make_vec({0.1, -0.05}), 0.4, g) - geom.k * 0.16);
    }
    EXPECT_LT(errs[1], 1e-3 * geom.k * 0.16) << g.id();
  }
  const auto g3 = FinslerGauge::euclidean(3);
  const auto d3 = square(3, 1.0, 40);
  EXPECT_NEAR(local_mass(ScalarField::constant(d3, 1.0), Vec::Zero(3), 0.5, g3), 4 * pi / 3 * 0.125,
              0.01 * 4 * pi / 3 * 0.125);
}

TEST(Blowup, LocalMassOfBubble) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = square(2, 1.0, 256);
  const Bubble b(geom, 1.0, 64.0, Vec::Zero(2));
  const auto rho = ScalarField::from_function(d, [&](const Vec& x) { return b.density(x); });
  for (double r : {0.1, 0.25, 0.5}) {
    EXPECT_NEAR(local_mass(rho, Vec::Zero(2), r, geom.gauge), disc_bubble_mass(64.0, r), 5e-3 * 8 * pi);
  }
  // Far from the center only the tail remains: the annulus mass is small.
  const double far = local_mass(rho, make_vec({0.7, 0.7}), 0.2, geom.gauge);
  EXPECT_LT(far, 1e-3);
}

TEST(Blowup, ThresholdFormula) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  EXPECT_NEAR(concentration_threshold(geom, 3.0, 1.0), 4 * pi / 3, 1e-13);
  const auto g3 = WulffGeometry::from_gauge(FinslerGauge::euclidean(3));
  // beta_3 = 3^{3/2} (4 pi / 3)^{1/2}
  const double beta3 = std::pow(3.0, 1.5) * std::sqrt(4 * pi / 3);
  EXPECT_NEAR(concentration_threshold(g3, 4.0, 0.5), std::pow(beta3 / 4, 2) * 0.5, 1e-12);
}

TEST(Blowup, TrichotomyLabels) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = square(2, 1.0, 128);
  BlowupConfig cfg;
  cfg.d0 = 1.0;
  std::vector<double> minus_n;
  for (int n = 1; n <= 10; ++n) minus_n.push_back(-n);
  const auto down = detect_blowup_set(constant_sequence(d, minus_n), geom, 3.0, cfg);
  EXPECT_EQ(down.label, Trichotomy::uniform_minus_infinity);
  EXPECT_TRUE(down.points.empty());

  const auto fixed = ScalarField::from_function(d, [](const Vec& x) { return std::sin(3 * x[0]) * x[1]; });
  std::vector<SequenceMember> same(4, {fixed, ScalarField::constant(d, 1.0)});
  EXPECT_EQ(classify_trichotomy(same, geom, 3.0, cfg), Trichotomy::bounded);

  std::vector<double> lambdas;
  for (int n = 1; n <= 6; ++n) lambdas.push_back(std::pow(2.0, n));
  const auto bubbles = bubble_sequence(d, geom, 1.0, lambdas, {Vec::Zero(2)});
  EXPECT_EQ(classify_trichotomy(bubbles, geom, 3.0, cfg), Trichotomy::concentration);
}

TEST(Blowup, SingleBubbleMass) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = square(2, 1.0, 256);
  std::vector<double> lambdas;
  for (int n = 1; n <= 6; ++n) lambdas.push_back(std::pow(2.0, n));
  BlowupConfig cfg;
  cfg.d0 = 1.0;
  const auto rep = detect_blowup_set(bubble_sequence(d, geom, 1.0, lambdas, {Vec::Zero(2)}), geom, 3.0, cfg);
  ASSERT_EQ(rep.points.size(), 1u);
  EXPECT_LT(rep.points[0].position.norm(), 1e-12);
  EXPECT_NEAR(rep.points[0].alpha, 8 * pi, 0.02 * 8 * pi);
  EXPECT_TRUE(rep.points[0].schedule.stabilized);
  EXPECT_GE(rep.points[0].alpha, rep.gamma);
  EXPECT_LE(rep.points[0].alpha, rep.total_masses.back() + 1e-9);
}

TEST(Blowup, TwoBubblesGiveTwoPoints) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = Domain::box(make_vec({-2, -1}), make_vec({2, 1}), std::vector<int>{512, 256});
  std::vector<double> lambdas;
  for (int n = 1; n <= 6; ++n) lambdas.push_back(std::pow(2.0, n));
  BlowupConfig cfg;
  cfg.d0 = 1.0;
  const auto rep = detect_blowup_set(
      bubble_sequence(d, geom, 1.0, lambdas, {make_vec({-1, 0}), make_vec({1, 0})}), geom, 3.0, cfg);
  ASSERT_EQ(rep.points.size(), 2u);
  for (const auto& p : rep.points) {
    EXPECT_NEAR(std::abs(p.position[0]), 1.0, 1e-12);
    EXPECT_NEAR(p.alpha, 8 * pi, 0.03 * 8 * pi);
  }
}

TEST(Blowup, DetectorRejectsBadSequences) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto a = square(2, 1.0, 32);
  const auto b = square(2, 1.0, 64);
  BlowupConfig cfg;
  cfg.d0 = 1.0;
  EXPECT_THROW(detect_blowup_set(constant_sequence(a, {1, 2}), geom, 3.0, cfg), InputError);
  auto seq = constant_sequence(a, {1, 2});
  seq.push_back({ScalarField::constant(b, 3.0), ScalarField::constant(b, 1.0)});
  EXPECT_THROW(detect_blowup_set(seq, geom, 3.0, cfg), InputError);
}

TEST(Blowup, PohozaevGreenLeftSide) {
  for (const auto& g : {FinslerGauge::euclidean(2), FinslerGauge::diagonal(make_vec({1, 4})),
                        FinslerGauge::euclidean(3)}) {
    const auto geom = WulffGeometry::from_gauge(g);
    const int n = g.dimension();
    const double alpha = 5.0;
    const GreenFunction G(geom, 1.0, alpha, Vec::Zero(n));
    std::vector<double> radii{0.4, 0.2, 0.1}, left;
    for (double eps : radii) {
      const auto b = pohozaev_terms(
          PohozaevInput{[&](const Vec& x) { return G.value(x); }, [&](const Vec& x) { return G.gradient(x); },
                        nullptr, nullptr},
          Vec::Zero(n), eps, geom);
      EXPECT_EQ(b.mass_term, 0.0);
      left.push_back(b.left());
    }
    // -(N-1) k c^N with c = (alpha / (N k))^{1/(N-1)}.
    const double c = std::pow(alpha / (n * geom.k), 1.0 / (n - 1));
    const double expected = -(n - 1) * geom.k * std::pow(c, n);
    EXPECT_NEAR(richardson_limit(radii, left), expected, 1e-6 * std::abs(expected)) << g.id();
    EXPECT_NEAR(pohozaev_green_left(geom, alpha), expected, 1e-12 * std::abs(expected));
    EXPECT_NEAR(alpha_from_pohozaev_left(geom, expected), alpha, 1e-12 * alpha);
  }
  const auto e2 = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  EXPECT_NEAR(pohozaev_green_left(e2, 8 * pi), -16 * pi, 1e-12);
}

TEST(Blowup, PohozaevBubbleBalance) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const Bubble b(geom, 1.0, 200.0, Vec::Zero(2));
  PohozaevInput in{[&](const Vec& x) { return b.value(x); }, [&](const Vec& x) { return b.gradient(x); },
                   [](const Vec&) { return 1.0; }, [](const Vec&) { return Vec(Vec::Zero(2)); }};
  const auto p = pohozaev_terms(in, Vec::Zero(2), 0.5, geom);
  EXPECT_NEAR(p.residual(), 0.0, 1e-6);
  EXPECT_NEAR(p.right(), -16 * pi, 1e-3 * 16 * pi);
  EXPECT_NEAR(p.left(), -16 * pi, 1e-3 * 16 * pi);
}

TEST(Blowup, PohozaevAffineGridField) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::diagonal(make_vec({1, 2})));
  const auto d = square(2, 1.0, 64);
  const auto v = ScalarField::from_function(d, [](const Vec& x) { return 0.7 * x[0] - 0.4 * x[1] + 2.0; });
  const auto zero = ScalarField::constant(d, 0.0);
  const auto p = pohozaev_terms(v, zero, make_vec({0.05, 0.0}), 0.4, geom);
  EXPECT_TRUE(std::isfinite(p.flux_term));
  EXPECT_GT(std::abs(p.flux_term), 1e-3);
  EXPECT_EQ(p.mass_term, 0.0);
  EXPECT_EQ(p.gradient_term, 0.0);
  EXPECT_NEAR(p.residual(), 0.0, 1e-6);
  EXPECT_THROW(pohozaev_terms(v, zero, Vec::Zero(2), 3.0 * d->h(), geom), InputError);
  EXPECT_THROW(pohozaev_terms(v, zero, make_vec({0.9, 0.0}), 0.4, geom), InputError);
}

TEST(Blowup, PohozaevGridBubbleMatchesClosedForm) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = square(2, 1.0, 256);
  const Bubble b(geom, 1.0, 64.0, Vec::Zero(2));
  const auto u = ScalarField::from_function(d, [&](const Vec& x) { return b.value(x); });
  const auto p = pohozaev_terms(u, ScalarField::constant(d, 1.0), Vec::Zero(2), 0.25, geom);
  // Closed form at eps: |grad u| = 4 S / (eps (1 + S)), S = (l eps)^2, so the
  // left side is -pi (4 S / (1 + S))^2.
  const double s = std::pow(64.0 * 0.25, 2);
  const double left = -pi * std::pow(4 * s / (1 + s), 2);
  EXPECT_NEAR(p.left(), left, 5e-3 * std::abs(left));
  EXPECT_NEAR(p.mass_term, -2 * disc_bubble_mass(64.0, 0.25), 5e-3 * 16 * pi);
  EXPECT_NEAR(p.residual(), 0.0, 0.01 * 16 * pi);
}

TEST(Blowup, MassExtractEuclideanAndDiagonal) {
  std::vector<double> lambdas;
  for (int n = 1; n <= 6; ++n) lambdas.push_back(std::pow(2.0, n));
  BlowupConfig cfg;
  cfg.d0 = 1.0;
  {
    const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
    const auto d = square(2, 1.0, 256);
    const auto rep = blowup_mass_extract(bubble_sequence(d, geom, 1.0, lambdas, {Vec::Zero(2)}), geom, 3.0, cfg);
    EXPECT_NEAR(rep.alpha_formula, 8 * pi, 1e-12);
    EXPECT_NEAR(rep.alpha_local_mass, 8 * pi, 0.02 * 8 * pi);
    EXPECT_NEAR(rep.alpha_pohozaev, 8 * pi, 0.02 * 8 * pi);
  }
  {
    // F0(x) = sqrt(x^2 + y^2 / 4): W_1 is an ellipse of area 2 pi.
    const auto geom = WulffGeometry::from_gauge(FinslerGauge::diagonal(make_vec({1, 4})));
    ASSERT_NEAR(geom.k, 2 * pi, 1e-9);
    const auto d = Domain::box(make_vec({-1, -2}), make_vec({1, 2}), std::vector<int>{256, 512});
    cfg.d0 = -1.0;
    const auto rep = blowup_mass_extract(bubble_sequence(d, geom, 1.0, lambdas, {Vec::Zero(2)}), geom, 3.0, cfg);
    EXPECT_NEAR(rep.alpha_formula, 16 * pi, 1e-9);
    EXPECT_NEAR(rep.alpha_local_mass, 16 * pi, 0.02 * 16 * pi);
    EXPECT_NEAR(rep.alpha_pohozaev, 16 * pi, 0.02 * 16 * pi);
  }
}

TEST(Blowup, MassExtractNeedsOnePoint) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto d = Domain::box(make_vec({-2, -1}), make_vec({2, 1}), std::vector<int>{256, 128});
  BlowupConfig cfg;
  cfg.d0 = 1.0;
  const auto seq = bubble_sequence(d, geom, 1.0, {2, 8, 32, 64}, {make_vec({-1, 0}), make_vec({1, 0})});
  EXPECT_THROW(blowup_mass_extract(seq, geom, 3.0, cfg), InputError);
  const auto flat = constant_sequence(d, {0, 0, 0});
  EXPECT_THROW(blowup_mass_extract(flat, geom, 3.0, cfg), InputError);
}
