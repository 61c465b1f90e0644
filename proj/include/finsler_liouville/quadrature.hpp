#pragma once

#include "finsler_liouville/types.hpp"

#include <functional>
#include <vector>

namespace fl {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached per n; thread-safe.
const GaussRule& gauss_legendre(int n);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) on [a, b]. Throws QuadratureError when the
/// requested accuracy max(abs_tol, rel_tol * |I|, 50 eps \int |f|) is not met within
/// max_intervals subdivisions.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-10, double abs_tol = 1e-14,
                                    int max_intervals = 4000);

/// Fixed composite Gauss-Legendre with `panels` panels of `order` points.
double integrate_composite(const std::function<double(double)>& f, double a, double b, int panels,
                           int order = 8);

/// Integral over the unit sphere S^{dim-1} (dim 2 or 3) of f(omega) against the
/// round surface measure. Refines until successive estimates agree to
/// rel_tol * max(|I|, int |f|). dim 2 uses the periodic trapezoid rule, dim 3
/// a Gauss-Legendre(z) x trapezoid(phi) product rule.
QuadratureResult integrate_sphere(int dim, const std::function<double(const Vec&)>& f,
                                  double rel_tol = 1e-10);

}  // namespace fl
