#include "finsler_liouville/finsler_core.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fl;

namespace {

constexpr double pi = std::numbers::pi;

// Area of a planar convex body from its support function h(theta) = F(w):
// A = 1/2 \int (h^2 - h'^2). Independent of any dual-norm evaluation.
double area_from_support(const FinslerGauge& g, int n = 20000) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * pi * i / n;
    const Vec w = make_vec({std::cos(t), std::sin(t)});
    const Vec wp = make_vec({-std::sin(t), std::cos(t)});
    const double h = norm(g, w);
    const double hp = norm_grad(g, w).dot(wp);
    sum += h * h - hp * hp;
  }
  return 0.5 * sum * 2.0 * pi / n;
}

}  // namespace

TEST(FinslerCore, EuclideanValues) {
  const auto g = FinslerGauge::euclidean(2);
  const Vec xi = make_vec({3, 4});
  EXPECT_DOUBLE_EQ(norm(g, xi), 5.0);
  const Vec grad = norm_grad(g, xi);
  EXPECT_NEAR(grad[0], 0.6, 1e-15);
  EXPECT_NEAR(grad[1], 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(dual_norm(g, xi), 5.0);
}

TEST(FinslerCore, PNormAndDual) {
  const auto g = FinslerGauge::p_norm(2, 4.0);
  const Vec one = make_vec({1, 1});
  EXPECT_NEAR(norm(g, one), std::pow(2.0, 0.25), 1e-15);
  EXPECT_NEAR(dual_norm(g, one), std::pow(2.0, 0.75), 1e-14);
}

TEST(FinslerCore, DiagonalDualInvertsWeights) {
  const auto g = FinslerGauge::diagonal(make_vec({1, 4}));
  EXPECT_DOUBLE_EQ(norm(g, make_vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(dual_norm(g, make_vec({0, 1})), 0.5);
}

TEST(FinslerCore, GradientAtOriginThrows) {
  const auto g = FinslerGauge::diagonal(make_vec({1, 4}));
  EXPECT_THROW(norm_grad(g, Vec::Zero(2)), SingularPointError);
  EXPECT_THROW(hess_fn(g, Vec::Zero(2)), SingularPointError);
  EXPECT_THROW(dual_norm_grad(g, Vec::Zero(2)), SingularPointError);
  EXPECT_TRUE(flux(g, Vec::Zero(2)).isZero());
}

TEST(FinslerCore, HessFnMatchesFiniteDifferencesOfFlux) {
  // grad(F^N) = N flux, so Hess(F^N) = N d(flux). Central differences at two
  // step sizes: the error must drop by about 4x.
  for (const auto& g : {FinslerGauge::diagonal(make_vec({1, 4})), FinslerGauge::p_norm(2, 4.0),
                        FinslerGauge::smoothed_p_norm(2, 4.0, 0.3), FinslerGauge::euclidean(3)}) {
    const int n = g.dimension();
    Vec xi(n);
    for (int i = 0; i < n; ++i) xi[i] = 0.7 - 0.45 * i;
    const Mat h = hess_fn(g, xi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(h)};
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0) << g.id();
    double errs[2];
    const double steps[2] = {1e-3, 5e-4};
    for (int s = 0; s < 2; ++s) {
      Mat fd(n, n);
      for (int j = 0; j < n; ++j) {
        Vec e = Vec::Zero(n);
        e[j] = steps[s];
        fd.col(j) = n * (flux(g, Vec(xi + e)) - flux(g, Vec(xi - e))) / (2 * steps[s]);
      }
      errs[s] = (fd - h).cwiseAbs().maxCoeff();
    }
    EXPECT_LT(errs[0], 1e-4) << g.id();
    if (g.family() != GaugeFamily::smoothed_p_norm) {
      EXPECT_LT(errs[1], std::max(errs[0] * 0.4, 1e-9)) << g.id();
    }
  }
}

TEST(FinslerCore, TemplatedOnLongDouble) {
  const auto g = FinslerGauge::p_norm(2, 3.0);
  VecN<long double> xi(2);
  xi << 1.0L, 2.0L;
  const long double f = norm(g, xi);
  const long double euler = xi.dot(norm_grad(g, xi));
  EXPECT_NEAR(static_cast<double>(f - euler), 0.0, 1e-17);
}

TEST(FinslerCore, WulffVolumeClosedForms) {
  EXPECT_DOUBLE_EQ(wulff_volume(FinslerGauge::euclidean(2)), pi);
  EXPECT_NEAR(wulff_volume(FinslerGauge::euclidean(3)), 4.0 * pi / 3.0, 1e-14);
  EXPECT_NEAR(wulff_volume(FinslerGauge::diagonal(make_vec({1, 4}))), 2.0 * pi, 1e-14);
}

TEST(FinslerCore, WulffVolumePNormAgainstTwoDimensionalOracle) {
  // The boundary of {|x|^{4/3} + |y|^{4/3} <= 1} is (cos^{3/2} t, sin^{3/2} t)
  // in the first quadrant; Green's theorem gives area 3 \int_0^{pi/2} sqrt(cos t sin t) dt.
  // Tanh-sinh quadrature absorbs the endpoint square roots.
  auto f = [](double t) { return 3.0 * std::sqrt(std::cos(t) * std::sin(t)); };
  const double h = 1.0 / 64;
  double sum = 0.0;
  for (int j = -6 * 64; j <= 6 * 64; ++j) {
    const double s = j * h;
    const double u = 0.5 * pi * std::sinh(s);
    const double x = std::tanh(u);
    const double w = 0.5 * pi * std::cosh(s) / (std::cosh(u) * std::cosh(u));
    const double t = 0.25 * pi * (1.0 + x);
    if (t <= 0.0 || t >= 0.5 * pi) continue;
    sum += w * f(t);
  }
  const double oracle = 0.25 * pi * h * sum;
  EXPECT_NEAR(wulff_volume(FinslerGauge::p_norm(2, 4.0)), oracle, 1e-10);
}

TEST(FinslerCore, WulffVolumeByQuadratureMatchesSupportFunctionArea) {
  const auto g = FinslerGauge::smoothed_p_norm(2, 4.0, 0.25);
  EXPECT_NEAR(wulff_volume(g), area_from_support(g), 1e-7);
  // Quadrature path on an analytic gauge wrapped as a user gauge.
  const auto diag = FinslerGauge::diagonal(make_vec({1, 4}));
  const auto user = FinslerGauge::user(
      2, {[diag](const Vec& x) { return norm(diag, x); }, {}}, "ellipse");
  EXPECT_NEAR(wulff_volume(user), 2.0 * pi, 1e-7);
}

TEST(FinslerCore, WulffVolumeThreeDimensionalQuadrature) {
  const auto diag = FinslerGauge::diagonal(make_vec({1, 4, 9}));
  const auto user = FinslerGauge::user(
      3,
      {[diag](const Vec& x) { return norm(diag, x); },
       [diag](const Vec& x) { return Vec(norm_grad(diag, x)); }},
      "ellipsoid");
  EXPECT_NEAR(wulff_volume(user), 4.0 * pi / 3.0 * 6.0, 1e-5 * 8 * pi);
}

TEST(FinslerCore, DualOfNumericGaugeMatchesBruteForceSupremum) {
  const auto g = FinslerGauge::smoothed_p_norm(2, 4.0, 0.2);
  const Vec x = make_vec({0.3, -1.1});
  double best = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * pi * i / n;
    const Vec w = make_vec({std::cos(t), std::sin(t)});
    best = std::max(best, x.dot(w) / norm(g, w));
  }
  EXPECT_NEAR(dual_norm(g, x), best, 1e-9);
  EXPECT_NEAR(norm(g, dual_norm_grad(g, x)), 1.0, 1e-9);
}

TEST(FinslerCore, DualOfDualReturnsOriginal) {
  // For the p-norm the dual exponent map is an involution.
  const auto g = FinslerGauge::p_norm(3, 3.0);
  const auto h = FinslerGauge::p_norm(3, 1.5);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 50; ++i) {
    const Vec x = make_vec({nd(rng), nd(rng), nd(rng)});
    EXPECT_NEAR(dual_norm(h, x), norm(g, x), 1e-10 * norm(g, x));
  }
}

TEST(FinslerCore, BoundaryQuadrature) {
  const auto euclid = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  EXPECT_NEAR(wulff_boundary_integral(euclid, 2.0, Vec::Zero(2), [](const Vec&) { return 1.0; }),
              4.0 * pi, 1e-10);
  for (const auto& g : {FinslerGauge::diagonal(make_vec({1, 4})), FinslerGauge::p_norm(2, 4.0),
                        FinslerGauge::smoothed_p_norm(2, 3.0, 0.3), FinslerGauge::euclidean(3),
                        FinslerGauge::diagonal(make_vec({1, 2, 5}))}) {
    const auto geom = WulffGeometry::from_gauge(g);
    const Vec c = Vec::Constant(g.dimension(), 0.25);
    const double perimeter = wulff_boundary_integral(
        geom, 1.0, c, [](const WulffBoundaryPoint& p) { return 1.0 / p.dual_grad.norm(); });
    EXPECT_NEAR(perimeter, g.dimension() * geom.k, 1e-6 * geom.k) << g.id();
    const Vec a = Vec::LinSpaced(g.dimension(), 1.0, 2.0);
    const double odd = wulff_boundary_integral(geom, 1.5, Vec::Zero(g.dimension()),
                                               [&](const Vec& x) { return a.dot(x); });
    EXPECT_NEAR(odd, 0.0, 1e-9) << g.id();
    const double vol = wulff_ball_integral(geom, 0.7, c, [](const Vec&) { return 1.0; });
    EXPECT_NEAR(vol, geom.ball_volume(0.7), 1e-6 * geom.k) << g.id();
  }
}

TEST(FinslerCore, PropertyReportEuclidean) {
  const auto report = verify_norm_properties(FinslerGauge::euclidean(3), 2000);
  EXPECT_LE(report.worst(), 1e-10);
  EXPECT_EQ(report.checks.size(), 9u);
}

TEST(FinslerCore, PropertyReportAnalyticAndNumericFamilies) {
  const auto p4 = verify_norm_properties(FinslerGauge::p_norm(2, 4.0), 2000);
  EXPECT_LE(p4.at("euler_identity").worst_violation, 1e-13);
  EXPECT_LE(p4.at("polarity").worst_violation, 1e-12);
  EXPECT_LE(p4.at("inverse_gradient_map").worst_violation, 1e-8);
  const auto sm = verify_norm_properties(FinslerGauge::smoothed_p_norm(2, 4.0, 0.2), 300);
  EXPECT_LE(sm.at("polarity").worst_violation, 1e-9);
  EXPECT_LE(sm.at("inverse_gradient_map").worst_violation, 1e-8);
  EXPECT_LE(sm.at("norm_equivalence").worst_violation, 0.0);
  EXPECT_TRUE(p4.to_json().is_array());
}

TEST(FinslerCore, PropertyReportFlagsOddGauge) {
  auto value = [](const Vec& x) { return x.norm() + 0.3 * x[0]; };
  const auto g = FinslerGauge::user(2, {value, {}}, "tilted");
  const auto report = verify_norm_properties(g, 200);
  const auto& even = report.at("evenness");
  EXPECT_GT(even.worst_violation, 0.1);
  const Vec w = even.witness;
  EXPECT_NE(value(w), value(Vec(-w)));
}

TEST(FinslerCore, D0Euclidean) {
  D0SearchConfig cfg;
  cfg.samples = 20000;
  cfg.polish_starts = 10;
  const auto d2 = estimate_d0(FinslerGauge::euclidean(2), cfg);
  EXPECT_NEAR(d2.d0_estimate, 1.0, 1e-12);
  const auto d3 = estimate_d0(FinslerGauge::euclidean(3), cfg);
  // Brute force over a pair grid: X on a great circle, Y = -s X.
  double brute = 1e300;
  const auto g = FinslerGauge::euclidean(3);
  for (int i = 0; i < 40; ++i) {
    for (int j = 1; j <= 200; ++j) {
      const double t = pi * i / 40;
      const Vec x = make_vec({std::cos(t), std::sin(t), 0.0});
      const Vec y = -0.01 * j * x;
      brute = std::min(brute, monotonicity_ratio(g, x, y));
    }
  }
  EXPECT_GE(d3.d0_estimate, 0.5 - 1e-9);
  EXPECT_LE(d3.d0_estimate, brute + 1e-12);
  EXPECT_NEAR(d3.d0_estimate, 0.5, 1e-6);
}

TEST(FinslerCore, D0DiagonalScaleInvariant) {
  const auto g = FinslerGauge::diagonal(make_vec({1, 4}));
  D0SearchConfig cfg;
  cfg.samples = 20000;
  cfg.polish_starts = 5;
  const auto d = estimate_d0(g, cfg);
  EXPECT_GT(d.d0_estimate, 0.0);
  const double base = monotonicity_ratio(g, d.argmin_x, d.argmin_y);
  EXPECT_NEAR(base, d.d0_estimate, 1e-12);
  for (double t : {0.5, 2.0, 10.0}) {
    EXPECT_NEAR(monotonicity_ratio(g, Vec(t * d.argmin_x), Vec(t * d.argmin_y)), base, 1e-12);
  }
}

TEST(FinslerCore, MvpCondition) {
  const auto e2 = check_mvp_condition(FinslerGauge::euclidean(2), 1000);
  EXPECT_TRUE(e2.holds);
  EXPECT_LE(e2.worst_residual, 1e-12);
  const auto e3 = FinslerGauge::euclidean(3);
  EXPECT_NEAR(mvp_condition_ratio(e3, make_vec({2, 0, 0}), make_vec({1, 1, 0})), 2.0, 1e-14);
  EXPECT_FALSE(check_mvp_condition(e3, 1000).holds);
  const auto diag = check_mvp_condition(FinslerGauge::diagonal(make_vec({1, 4})), 1000);
  EXPECT_TRUE(std::isfinite(diag.worst_residual));
}

TEST(FinslerCore, StructuralConstants) {
  EXPECT_NEAR(beta_constant(2, pi), 4 * pi, 1e-14);
  EXPECT_NEAR(alpha_formula(2, pi), 8 * pi, 1e-13);
  EXPECT_NEAR(alpha_formula(2, 2 * pi), 16 * pi, 1e-13);
  EXPECT_NEAR(alpha_formula(3, 4 * pi / 3), 9.104, 1e-3);
  EXPECT_NEAR(alpha_pohozaev_balance(2, pi), 8 * pi, 1e-13);
}

TEST(FinslerCore, GaugeSpecRoundTrip) {
  const auto g = parse_gauge_spec("family=diagonal; dimension=2; weights=1,4");
  EXPECT_EQ(g.id(), "diagonal[1,4]");
  const auto h = parse_gauge_spec(to_gauge_spec(FinslerGauge::smoothed_p_norm(3, 4, 0.1)));
  EXPECT_EQ(h.id(), "smoothed_p_norm[N=3,p=4,s=0.1]");
  EXPECT_THROW(parse_gauge_spec("family=bogus"), InputError);
  EXPECT_THROW(parse_gauge_spec("family=p_norm; p=0.5"), InputError);
}
