#include "finsler_liouville/rearrangement.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace fl;

namespace {

constexpr double pi = std::numbers::pi;

DomainPtr unit_box(int dim, int n) { return Domain::box(Vec::Zero(dim), Vec::Ones(dim), n); }

double lumped_superlevel(const ScalarField& u, double s) {
  const auto& w = u.domain().weights();
  double m = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > s) m += w[i];
  }
  return m;
}

// Smooth field vanishing on the boundary of the unit box.
std::function<double(const Vec&)> random_bubbly(std::mt19937& rng) {
  std::normal_distribution<double> nd;
  std::vector<std::pair<Vec, double>> modes;
  for (int m = 0; m < 4; ++m) {
    Vec k(3);
    for (int j = 0; j < 3; ++j) k[j] = 2.5 * nd(rng);
    modes.emplace_back(k, nd(rng));
  }
  return [modes](const Vec& x) {
    double s = 1.0;
    for (const auto& [k, c] : modes) s += 0.5 * c * std::sin(k.head(x.size()).dot(x) + c);
    double cut = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) cut *= 4.0 * x[j] * (1.0 - x[j]);
    return s * cut;
  };
}

}  // namespace

TEST(Rearrangement, TwoLevelAndConstantFields) {
  const auto d = unit_box(2, 40);
  const auto u = ScalarField::from_function(d, [](const Vec& x) { return x[0] < 0.3 ? -2.0 : 0.0; });
  const auto prof = decreasing_rearrangement(u);
  const double m = lumped_superlevel(u, 1.0);
  EXPECT_NEAR(m, 0.3, 2 * d->h());
  EXPECT_DOUBLE_EQ(prof.step(0.5 * m), 2.0);
  EXPECT_DOUBLE_EQ(prof.step(m + 1e-9), 0.0);
  EXPECT_NEAR(prof.measure(), 1.0, 1e-12);
  for (std::size_t j = 1; j < prof.values().size(); ++j) EXPECT_LE(prof.values()[j], prof.values()[j - 1]);

  const auto c = decreasing_rearrangement(ScalarField::constant(d, 1.5));
  for (double t : {0.0, 0.3, 0.99}) {
    EXPECT_DOUBLE_EQ(c(t), 1.5);
    EXPECT_DOUBLE_EQ(c.step(t), 1.5);
  }
  EXPECT_NEAR(c.integral(), 1.5, 1e-12);
}

TEST(Rearrangement, WulffConeProfile) {
  for (const auto& gauge : {FinslerGauge::euclidean(2), FinslerGauge::diagonal(make_vec({1, 4}))}) {
    const auto geom = WulffGeometry::from_gauge(gauge);
    const auto d = Domain::wulff_ball(geom, 1.0, Vec::Zero(2), 200);
    const auto u = ScalarField::from_function(d, [&](const Vec& x) { return 1.0 - dual_norm(gauge, x); });
    const auto prof = decreasing_rearrangement(u);
    for (double frac : {0.05, 0.3, 0.6, 0.9}) {
      const double t = frac * geom.k;
      EXPECT_NEAR(prof(t), 1.0 - std::sqrt(t / geom.k), 3 * d->h()) << gauge.id();
    }
  }
}

TEST(Rearrangement, EquimeasurabilityAndOrder) {
  std::mt19937 rng(21);
  const auto d = unit_box(2, 64);
  const auto u = ScalarField::from_function(d, random_bubbly(rng));
  const auto prof = decreasing_rearrangement(u);
  std::uniform_real_distribution<double> uni(0.0, u.max_abs());
  for (int i = 0; i < 20; ++i) {
    const double s = uni(rng);
    EXPECT_LE(std::abs(prof.superlevel_measure(s) - lumped_superlevel(u, s)), 2 * d->cell_volume());
  }
  // |u| <= |w| pointwise => u* <= w*.
  const auto w = u.map([](double x) { return std::abs(x) * 1.1 + 0.01; });
  const auto pw = decreasing_rearrangement(w);
  for (double t = 0.0; t < 1.0; t += 0.01) EXPECT_LE(prof(t), pw(t) + 1e-15);
}

TEST(Symmetrization, FixedPointIndicatorAndIdempotence) {
  const auto gauge = FinslerGauge::p_norm(2, 3.0);
  const auto geom = WulffGeometry::from_gauge(gauge);
  const auto d = Domain::wulff_ball(geom, 0.8, Vec::Zero(2), 128);
  const auto u = ScalarField::from_function(d, [&](const Vec& x) { return std::cos(1.5 * dual_norm(gauge, x)); });
  const auto us = convex_symmetrization(u, geom, d);
  double err = 0.0;
  for (Eigen::Index node : d->interior_nodes()) err = std::max(err, std::abs(us[node] - u[node]));
  EXPECT_LT(err, 2 * d->h());
  const auto uss = convex_symmetrization(us, geom, d);
  EXPECT_LT((uss.values() - us.values()).cwiseAbs().maxCoeff(), 2 * d->h());

  // Indicator of a square of measure m -> indicator of W_rho, k rho^N = m.
  const auto box = Domain::box(Vec::Zero(2), Vec::Constant(2, 2.0), 100);
  const auto chi = ScalarField::from_function(box, [](const Vec& x) {
    return (x[0] > 0.5 && x[0] < 1.5 && x[1] > 0.5 && x[1] < 1.5) ? 1.0 : 0.0;
  });
  const auto prof = decreasing_rearrangement(chi);
  const double m = lumped_superlevel(chi, 0.5);
  const double rho = geom.radius_for_volume(m);
  EXPECT_NEAR(symmetrized_value(prof, geom, make_vec({0.98 * rho, 0.0})), 1.0, 1e-12);
  EXPECT_NEAR(symmetrized_value(prof, geom, make_vec({0.0, 1.02 * rho})), 0.0, 1e-12);
  const auto star = convex_symmetrization(chi, geom);
  EXPECT_NEAR(star.domain().measure(), 4.0, 0.1);
}

TEST(Symmetrization, PolyaSzego) {
  std::mt19937 rng(4);
  const std::vector<FinslerGauge> gauges{FinslerGauge::euclidean(2), FinslerGauge::diagonal(make_vec({1, 4})),
                                         FinslerGauge::p_norm(2, 3.0)};
  for (int trial = 0; trial < 6; ++trial) {
    const auto& gauge = gauges[trial % gauges.size()];
    const auto geom = WulffGeometry::from_gauge(gauge);
    const auto d = unit_box(2, 96);
    const auto u = ScalarField::from_function(d, random_bubbly(rng));
    const auto us = convex_symmetrization(u, geom);
    for (double p : {2.0, 3.0}) {
      const double before = gradient_power_integral(u, gauge, p);
      const double after = gradient_power_integral(us, gauge, p);
      EXPECT_LE(after, 1.03 * before) << gauge.id() << " p=" << p;
    }
  }
}

TEST(Talenti, UnitSquareAndBump) {
  const auto gauge = FinslerGauge::euclidean(2);
  const auto d = unit_box(2, 64);
  const auto rep = talenti_compare(ScalarField::constant(d, 1.0), gauge);
  EXPECT_NEAR(rep.radius, 1.0 / std::sqrt(pi), 1e-12);
  // v(0) = R^2 / 4 = 1 / (4 pi).
  EXPECT_NEAR(rep.v_max, 1.0 / (4 * pi), 1e-3);
  EXPECT_LE(rep.max_excess, 2 * rep.h * rep.grad_v_max);
  EXPECT_LT(rep.u_max, rep.v_max);
  const auto bump = ScalarField::from_function(
      d, [](const Vec& x) { return std::exp(-40 * ((x[0] - 0.3) * (x[0] - 0.3) + (x[1] - 0.6) * (x[1] - 0.6))); });
  const auto rb = talenti_compare(bump, FinslerGauge::diagonal(make_vec({1, 2})));
  EXPECT_LE(rb.max_excess, 2 * rb.h * rb.grad_v_max);
}

TEST(Talenti, SymmetricProblemIsNearEquality) {
  const auto gauge = FinslerGauge::diagonal(make_vec({1, 4}));
  const auto geom = WulffGeometry::from_gauge(gauge);
  const auto d = Domain::wulff_ball(geom, 1.0, Vec::Zero(2), 96);
  const auto f = ScalarField::from_function(d, [&](const Vec& x) { return 2.0 - dual_norm(gauge, x); });
  const auto rep = talenti_compare(f, gauge);
  EXPECT_LE(std::abs(rep.max_excess), 2 * rep.h * rep.grad_v_max);
  EXPECT_NEAR(rep.u_max, rep.v_max, 2 * rep.h * rep.grad_v_max);
}

TEST(Rearrangement, CsvExport) {
  const auto d = unit_box(2, 4);
  const auto prof = decreasing_rearrangement(ScalarField::from_function(d, [](const Vec& x) { return x[0]; }));
  const auto path = (std::filesystem::temp_directory_path() / "fl_profile.csv").string();
  prof.write_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,u_star");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, static_cast<int>(prof.values().size()));
  std::filesystem::remove(path);
}
