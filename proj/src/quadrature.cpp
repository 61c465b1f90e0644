#include "finsler_liouville/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>

namespace fl {

namespace {

GaussRule compute_gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// Kronrod 15 / Gauss 7 abscissae and weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
  double a, b, value, error;
  double abs_value;  ///< Kronrod estimate of \int |f|
  bool operator<(const Interval& other) const { return error < other.error; }
};

Interval gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  double kronrod_abs = std::abs(fc) * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    kronrod += kWgk[j] * (f1 + f2);
    kronrod_abs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half), kronrod_abs * std::abs(half)};
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw InputError("gauss_legendre: n must be positive");
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol, double abs_tol, int max_intervals) {
  if (a == b) return {};
  std::priority_queue<Interval> heap;
  Interval first = gauss_kronrod(f, a, b);
  double total = first.value;
  double error = first.error;
  double abs_total = first.abs_value;
  heap.push(first);
  int evaluations = 15;
  // Below 50 eps \int |f| the error estimate is round-off, e.g. for integrands
  // that cancel to zero.
  auto target = [&] {
    return std::max({abs_tol, rel_tol * std::abs(total), 50.0 * std::numeric_limits<double>::epsilon() * abs_total});
  };
  while (error > target()) {
    if (static_cast<int>(heap.size()) >= max_intervals) {
      throw QuadratureError("adaptive quadrature did not reach tolerance", total, error);
    }
    const Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Interval left = gauss_kronrod(f, worst.a, mid);
    const Interval right = gauss_kronrod(f, mid, worst.b);
    evaluations += 30;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    abs_total += left.abs_value + right.abs_value - worst.abs_value;
    heap.push(left);
    heap.push(right);
  }
  // Recompute the sum in a fixed order for reproducibility.
  std::vector<Interval> parts;
  parts.reserve(heap.size());
  while (!heap.empty()) {
    parts.push_back(heap.top());
    heap.pop();
  }
  std::sort(parts.begin(), parts.end(), [](const Interval& l, const Interval& r) { return l.a < r.a; });
  double sum = 0.0;
  double err = 0.0;
  for (const auto& p : parts) {
    sum += p.value;
    err += p.error;
  }
  return {sum, err, evaluations};
}

double integrate_composite(const std::function<double(double)>& f, double a, double b, int panels,
                           int order) {
  const GaussRule& rule = gauss_legendre(order);
  const double width = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * width;
    double panel = 0.0;
    for (int q = 0; q < order; ++q) panel += rule.weights[q] * f(c + 0.5 * width * rule.nodes[q]);
    sum += 0.5 * width * panel;
  }
  return sum;
}

namespace {

QuadratureResult sphere_2d(const std::function<double(const Vec&)>& f, double rel_tol) {
  constexpr int kMaxPoints = 1 << 18;
  int n = 32;
  std::vector<double> values(n);
  double sum = 0.0;
  double abs_sum = 0.0;
  Vec omega(2);
  for (int i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / n;
    omega << std::cos(theta), std::sin(theta);
    values[i] = f(omega);
    sum += values[i];
    abs_sum += std::abs(values[i]);
  }
  double estimate = 2.0 * std::numbers::pi * sum / n;
  int evaluations = n;
  while (true) {
    double added = 0.0;
    double added_abs = 0.0;
    for (int i = 0; i < n; ++i) {
      const double theta = 2.0 * std::numbers::pi * (i + 0.5) / n;
      omega << std::cos(theta), std::sin(theta);
      const double v = f(omega);
      added += v;
      added_abs += std::abs(v);
    }
    evaluations += n;
    sum += added;
    abs_sum += added_abs;
    n *= 2;
    const double refined = 2.0 * std::numbers::pi * sum / n;
    const double scale = std::max(std::abs(refined), 2.0 * std::numbers::pi * abs_sum / n);
    const double change = std::abs(refined - estimate);
    estimate = refined;
    if (change <= rel_tol * scale || scale == 0.0) return {estimate, change, evaluations};
    if (n >= kMaxPoints) {
      throw QuadratureError("sphere quadrature did not converge", estimate, change);
    }
  }
}

double sphere_3d_rule(const std::function<double(const Vec&)>& f, int n, double* abs_value) {
  const GaussRule& rule = gauss_legendre(n);
  const int m = 2 * n;
  double sum = 0.0;
  double abs_sum = 0.0;
  Vec omega(3);
  for (int i = 0; i < n; ++i) {
    const double z = rule.nodes[i];
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ring = 0.0;
    double ring_abs = 0.0;
    for (int j = 0; j < m; ++j) {
      const double phi = 2.0 * std::numbers::pi * (j + 0.5) / m;
      omega << rho * std::cos(phi), rho * std::sin(phi), z;
      const double v = f(omega);
      ring += v;
      ring_abs += std::abs(v);
    }
    sum += rule.weights[i] * ring;
    abs_sum += rule.weights[i] * ring_abs;
  }
  const double dphi = 2.0 * std::numbers::pi / m;
  *abs_value = abs_sum * dphi;
  return sum * dphi;
}

QuadratureResult sphere_3d(const std::function<double(const Vec&)>& f, double rel_tol) {
  int n = 8;
  double abs_value = 0.0;
  double estimate = sphere_3d_rule(f, n, &abs_value);
  int evaluations = 2 * n * n;
  while (true) {
    n *= 2;
    const double refined = sphere_3d_rule(f, n, &abs_value);
    evaluations += 2 * n * n;
    const double change = std::abs(refined - estimate);
    estimate = refined;
    const double scale = std::max(std::abs(refined), abs_value);
    if (change <= rel_tol * scale || scale == 0.0) return {estimate, change, evaluations};
    if (n >= 512) throw QuadratureError("sphere quadrature did not converge", estimate, change);
  }
}

}  // namespace

QuadratureResult integrate_sphere(int dim, const std::function<double(const Vec&)>& f,
                                  double rel_tol) {
  if (dim == 2) return sphere_2d(f, rel_tol);
  if (dim == 3) return sphere_3d(f, rel_tol);
  throw InputError("integrate_sphere: only dimensions 2 and 3 are supported");
}

}  // namespace fl
