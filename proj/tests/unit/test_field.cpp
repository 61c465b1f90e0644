#include "finsler_liouville/field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

using namespace fl;

namespace {

constexpr double pi = std::numbers::pi;

DomainPtr unit_box(int dim, int n) {
  return Domain::box(Vec::Zero(dim), Vec::Ones(dim), n);
}

}  // namespace

TEST(Field, BoxMeasureAndWeights) {
  const auto d = Domain::box(make_vec({-1, 0}), make_vec({1, 3}), std::vector<int>{20, 30});
  EXPECT_NEAR(d->measure(), 6.0, 1e-12);
  EXPECT_NEAR(d->weights().sum(), 6.0, 1e-12);
  EXPECT_EQ(d->node_count(), 21 * 31);
  EXPECT_EQ(d->interior_nodes().size(), 19u * 29u);
  EXPECT_EQ(d->boundary_nodes().size(), 21u * 31u - 19u * 29u);
  // Interior lumped weights equal the cell volume.
  EXPECT_NEAR(d->weights()[d->interior_nodes()[7]], d->cell_volume(), 1e-15);
  const auto d3 = unit_box(3, 8);
  EXPECT_NEAR(d3->weights().sum(), 1.0, 1e-12);
  EXPECT_EQ(d3->simplices_per_cell(), 6);
}

TEST(Field, WulffBallMaskConvergesToBallVolume) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  double prev = 1e300;
  for (int n : {32, 64, 128, 256}) {
    const auto d = Domain::wulff_ball(geom, 1.0, Vec::Zero(2), n);
    const double err = std::abs(d->measure() - pi);
    EXPECT_LT(err, 8.0 * d->h());
    EXPECT_NEAR(integrate(ScalarField::constant(d, 1.0)), d->measure(), 1e-12);
    prev = std::min(prev, err);
  }
  EXPECT_LT(prev, 0.01);
  const auto ell = Domain::wulff_ball(
      WulffGeometry::from_gauge(FinslerGauge::diagonal(make_vec({1, 4}))), 1.0, Vec::Zero(2), 200);
  EXPECT_NEAR(ell->measure(), 2 * pi, 0.02);
  EXPECT_NEAR(ell->upper()[1], 2.0, 1e-14);
}

TEST(Field, GradientOfAffineAndConstantFields) {
  for (int dim : {2, 3}) {
    const auto d = unit_box(dim, 6);
    const Vec a = Vec::LinSpaced(dim, 0.5, -2.0);
    const auto u = ScalarField::from_function(d, [&](const Vec& x) { return a.dot(x) + 3.0; });
    for (const auto& g : discrete_gradient(u)) EXPECT_LT((g - a).norm(), 1e-12);
    d->for_each_simplex([&](Eigen::Index, const Simplex& s) {
      EXPECT_LT((simplex_gradient(*d, s, u.values()) - a).norm(), 1e-12);
    });
    const auto c = ScalarField::constant(d, 4.0);
    for (const auto& g : discrete_gradient(c)) EXPECT_EQ(g.norm(), 0.0);
  }
}

TEST(Field, GradientRefinementStudy) {
  // u = |x|^2/2 + sin(x0 x1): simplex gradient vs exact gradient at the
  // simplex centroid is O(h).
  auto exact = [](const Vec& x) {
    return make_vec({x[0] + x[1] * std::cos(x[0] * x[1]), x[1] + x[0] * std::cos(x[0] * x[1])});
  };
  double errs[3];
  int k = 0;
  for (int n : {16, 32, 64}) {
    const auto d = unit_box(2, n);
    const auto u = ScalarField::from_function(
        d, [](const Vec& x) { return 0.5 * x.squaredNorm() + std::sin(x[0] * x[1]); });
    double err = 0.0;
    d->for_each_simplex([&](Eigen::Index, const Simplex& s) {
      Vec centroid = Vec::Zero(2);
      for (int j = 0; j <= 2; ++j) centroid += d->node_position(s.vertex[j]) / 3.0;
      err = std::max(err, (simplex_gradient(*d, s, u.values()) - exact(centroid)).norm());
    });
    errs[k++] = err;
  }
  EXPECT_LT(errs[1], 0.6 * errs[0]);
  EXPECT_LT(errs[2], 0.6 * errs[1]);
}

TEST(Field, IntegrateConstantsAndExponential) {
  const auto d = unit_box(2, 10);
  EXPECT_NEAR(integrate(ScalarField::constant(d, 1.0)), 1.0, 1e-14);
  EXPECT_NEAR(integrate(ScalarField::constant(d, 0.0).map([](double v) { return std::exp(v); })),
              1.0, 1e-14);
  EXPECT_NEAR(integrate_cells(*d, Eigen::VectorXd::Constant(d->cell_count(), 2.0)), 2.0, 1e-14);
}

TEST(Field, DistributionOfTwoLevelField) {
  const auto d = Domain::box(make_vec({-1, -1}), make_vec({1, 1}), 64);
  const auto u = ScalarField::from_function(d, [](const Vec& x) {
    return (std::abs(x[0]) < 0.5 && std::abs(x[1]) < 0.5) ? 2.0 : 0.0;
  });
  const auto prof = distribution_function(u, {0.0, 1.0, 1.999, 2.0, 3.0});
  EXPECT_NEAR(prof.measures[0], 1.0, 4.0 * 2.0 / 64);
  EXPECT_EQ(prof.measures[0], prof.measures[1]);
  EXPECT_EQ(prof.measures[0], prof.measures[2]);
  EXPECT_EQ(prof.measures[3], 0.0);
  EXPECT_EQ(prof.measures[4], 0.0);
  const auto zero = distribution_function(ScalarField::constant(d, 0.0), {0.0, 1.0});
  EXPECT_EQ(zero.measures[0], 0.0);
  EXPECT_THROW(distribution_function(u, {1.0, 0.0}), InputError);
}

TEST(Field, ExactP1MeasureOfLinearFields) {
  const auto d2 = unit_box(2, 7);
  const auto u2 = ScalarField::from_function(d2, [](const Vec& x) { return x[0] + x[1]; });
  for (double t : {0.1, 0.5, 0.93, 1.0, 1.4}) {
    const double below = t <= 1 ? t * t / 2 : 1 - (2 - t) * (2 - t) / 2;
    EXPECT_NEAR(superlevel_measure(u2, t), 1 - below, 1e-13) << t;
  }
  const auto d3 = unit_box(3, 5);
  const auto u3 = ScalarField::from_function(d3, [](const Vec& x) { return x.sum(); });
  for (double t : {0.3, 0.8, 1.2, 1.5, 2.2}) {
    double below = std::pow(t, 3) / 6;
    if (t > 1) below -= 3 * std::pow(t - 1, 3) / 6;
    if (t > 2) below += 3 * std::pow(t - 2, 3) / 6;
    EXPECT_NEAR(superlevel_measure(u3, t), 1 - below, 1e-12) << t;
  }
}

TEST(Field, DistributionOfWulffCone) {
  for (const auto& g : {FinslerGauge::euclidean(2), FinslerGauge::diagonal(make_vec({1, 4}))}) {
    const auto geom = WulffGeometry::from_gauge(g);
    const Vec ext = 1.1 * wulff_extent(g);
    const auto d = Domain::box(-ext, ext, 256);
    const auto u = ScalarField::from_function(
        d, [&](const Vec& x) { return std::max(0.0, 1.0 - dual_norm(g, x)); });
    const std::vector<double> ts = {0.05, 0.25, 0.5, 0.75, 0.95};
    const auto p1 = distribution_function(u, ts, LevelMeasure::p1);
    const auto lumped = distribution_function(u, ts, LevelMeasure::lumped);
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const double exact = geom.k * std::pow(1 - ts[j], 2);
      EXPECT_NEAR(p1.measures[j], exact, 2e-4 * geom.k) << g.id();
      EXPECT_NEAR(lumped.measures[j], exact, 0.02 * geom.k) << g.id();
    }
  }
}

TEST(Field, PerimeterOfCellSets) {
  const auto d = Domain::box(make_vec({-1, -1}), make_vec({2, 2}), 30);
  std::vector<char> square(d->cell_count(), 0);
  for (Eigen::Index c = 0; c < d->cell_count(); ++c) {
    const Vec x = d->cell_center(c);
    square[c] = (x.array() > 0.0).all() && (x.array() < 1.0).all();
  }
  EXPECT_NEAR(anisotropic_perimeter(*d, square, FinslerGauge::euclidean(2)), 4.0, 1e-12);
  EXPECT_NEAR(anisotropic_perimeter(*d, square, FinslerGauge::diagonal(make_vec({1, 4}))), 6.0,
              1e-12);
  std::vector<char> all(d->cell_count(), 1);
  EXPECT_NEAR(anisotropic_perimeter(*d, all, FinslerGauge::euclidean(2)), 12.0, 1e-12);
}

TEST(Field, WulffBallLevelSetPerimeterIsNk) {
  for (const auto& g : {FinslerGauge::euclidean(2), FinslerGauge::diagonal(make_vec({1, 4})),
                        FinslerGauge::p_norm(2, 3.0)}) {
    const auto geom = WulffGeometry::from_gauge(g);
    const Vec ext = 1.3 * wulff_extent(g);
    double errs[2];
    int k = 0;
    for (int n : {64, 128}) {
      const auto d = Domain::box(-ext, ext, n);
      const auto phi = ScalarField::from_function(d, [&](const Vec& x) { return 1.0 - dual_norm(g, x); });
      errs[k++] = std::abs(level_set_perimeter(phi, 0.0, g) - 2 * geom.k);
    }
    EXPECT_LT(errs[1], 2e-3 * geom.k) << g.id();
    EXPECT_LT(errs[1], errs[0]) << g.id();
  }
  const auto g3 = FinslerGauge::euclidean(3);
  const auto d3 = Domain::box(Vec::Constant(3, -1.3), Vec::Constant(3, 1.3), 40);
  const auto phi3 = ScalarField::from_function(d3, [](const Vec& x) { return 1.0 - x.norm(); });
  EXPECT_NEAR(level_set_perimeter(phi3, 0.0, g3), 4 * pi, 0.02 * 4 * pi);
}

TEST(Field, TotalVariationOfWulffCone) {
  const auto g = FinslerGauge::diagonal(make_vec({1, 4}));
  const auto geom = WulffGeometry::from_gauge(g);
  const auto d = Domain::wulff_ball(geom, 1.0, Vec::Zero(2), 256);
  const auto u = ScalarField::from_function(d, [&](const Vec& x) { return 1.0 - dual_norm(g, x); });
  EXPECT_NEAR(anisotropic_tv(u, g), geom.k, 0.01 * geom.k);
}

TEST(Field, CoareaIdentity) {
  const auto g = FinslerGauge::diagonal(make_vec({1, 2}));
  const auto d = unit_box(2, 128);
  const auto u = ScalarField::from_function(d, [](const Vec& x) {
    return std::sin(pi * x[0]) * std::sin(pi * x[1]) * (1.0 + 0.5 * std::cos(3 * x[0]));
  });
  const double tv = anisotropic_tv(u, g);
  EXPECT_NEAR(coarea_integral(u, g), tv, 1e-3 * tv);
}

TEST(Field, IoRoundTrip) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::diagonal(make_vec({1, 4})));
  const auto d = Domain::wulff_ball(geom, 0.5, make_vec({0.1, 0.2}), 16);
  const auto u = ScalarField::from_function(d, [](const Vec& x) { return std::exp(x[0]) - x[1] / 3; });
  const auto dir = std::filesystem::temp_directory_path();
  for (bool binary : {false, true}) {
    const std::string path = (dir / (binary ? "fl_field.bin" : "fl_field.csv")).string();
    binary ? write_field_binary(u, path) : write_field_csv(u, path);
    const auto back = read_field(path);
    EXPECT_EQ(back.domain().measure(), d->measure());
    EXPECT_LE((back.values() - u.values()).cwiseAbs().maxCoeff(), binary ? 0.0 : 1e-15);
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".json");
  }
}

TEST(Field, DomainSpecParsing) {
  const auto geom = WulffGeometry::from_gauge(FinslerGauge::euclidean(2));
  const auto box = parse_domain_spec("shape=box; lower=0,0; upper=2,1; cells=8", geom);
  EXPECT_NEAR(box->measure(), 2.0, 1e-14);
  const auto ball = parse_domain_spec("shape=wulff_ball; radius=2; cells=32", geom);
  EXPECT_EQ(ball->shape(), DomainShape::wulff_ball);
  EXPECT_THROW(parse_domain_spec("shape=torus", geom), InputError);
}

TEST(Field, InterpolationIsExactForAffineFields) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int dim : {2, 3}) {
    const auto d = Domain::box(Vec::Constant(dim, -1.0), Vec::Constant(dim, 2.0), 7);
    const Vec a = Vec::LinSpaced(dim, 0.3, -1.1);
    const auto f = [&](const Vec& x) { return a.dot(x) - 0.5; };
    const auto u = ScalarField::from_function(d, f);
    for (int i = 0; i < 50; ++i) {
      Vec x(dim);
      for (int j = 0; j < dim; ++j) x[j] = -1.0 + 3.0 * uni(rng);
      EXPECT_NEAR(interpolate(u, x), f(x), 1e-12);
    }
    EXPECT_NEAR(interpolate(u, d->upper()), f(d->upper()), 1e-12);
    EXPECT_THROW(interpolate(u, Vec::Constant(dim, 2.5)), InputError);
  }
  // A nonlinear field is reproduced at nodes and is linear along cell edges.
  const auto d = unit_box(2, 4);
  const auto u = ScalarField::from_function(d, [](const Vec& x) { return x[0] * x[0] + x[1]; });
  EXPECT_NEAR(interpolate(u, make_vec({0.5, 0.25})), 0.5, 1e-14);
  EXPECT_NEAR(interpolate(u, make_vec({0.125, 0.0})), 0.5 * 0.0625, 1e-14);
  const auto ball = Domain::wulff_ball(WulffGeometry::from_gauge(FinslerGauge::euclidean(2)), 1.0,
                                       Vec::Zero(2), 16);
  EXPECT_THROW(interpolate(ScalarField::constant(ball, 1.0), make_vec({0.99, 0.99})), InputError);
}
