#include "finsler_liouville/field.hpp"

#include "finsler_liouville/key_value.hpp"
#include "finsler_liouville/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fl {

std::string to_string(DomainShape shape) {
  switch (shape) {
    case DomainShape::box: return "box";
    case DomainShape::wulff_ball: return "wulff_ball";
    case DomainShape::masked_box: return "masked_box";
  }
  return "unknown";
}

namespace {

std::vector<std::vector<int>> kuhn_paths(int dim) {
  std::vector<int> perm(dim);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

void Domain::init_grid(const Vec& lower, const Vec& upper, const std::vector<int>& cells) {
  dim_ = static_cast<int>(lower.size());
  if (dim_ < 2 || dim_ > 3) throw InputError("grids are supported in dimensions 2 and 3");
  if (upper.size() != dim_ || static_cast<int>(cells.size()) != dim_) {
    throw InputError("domain: lower, upper and cells must have the same dimension");
  }
  lower_ = lower;
  upper_ = upper;
  cells_ = cells;
  h_.resize(dim_);
  node_stride_.assign(dim_, 1);
  cell_stride_.assign(dim_, 1);
  cell_count_ = 1;
  node_count_ = 1;
  for (int d = 0; d < dim_; ++d) {
    if (cells[d] < 2) throw InputError("domain resolution must be at least 2 cells per axis");
    if (!(upper[d] > lower[d])) throw InputError("domain: upper must exceed lower");
    h_[d] = (upper[d] - lower[d]) / cells[d];
    node_stride_[d] = node_count_;
    cell_stride_[d] = cell_count_;
    node_count_ *= cells[d] + 1;
    cell_count_ *= cells[d];
  }
  cell_volume_ = h_.prod();
  paths_ = kuhn_paths(dim_);
  simplex_volume_ = cell_volume_ / static_cast<double>(paths_.size());
  active_.assign(cell_count_, 1);
}

void Domain::finalize() {
  kind_.assign(node_count_, NodeKind::outside);
  weights_ = Eigen::VectorXd::Zero(node_count_);
  measure_ = 0.0;
  std::vector<std::uint8_t> touched(node_count_, 0);
  for (Eigen::Index c = 0; c < cell_count_; ++c) {
    if (!active_[c]) continue;
    measure_ += cell_volume_;
    for (int s = 0; s < simplices_per_cell(); ++s) {
      const Simplex sx = simplex(c, s);
      for (int j = 0; j <= dim_; ++j) {
        weights_[sx.vertex[j]] += simplex_volume_ / (dim_ + 1);
        touched[sx.vertex[j]] = 1;
      }
    }
  }
  interior_.clear();
  boundary_.clear();
  for (Eigen::Index n = 0; n < node_count_; ++n) {
    if (!touched[n]) continue;
    const auto idx = node_multi_index(n);
    bool interior = true;
    for (int corner = 0; corner < (1 << dim_) && interior; ++corner) {
      Eigen::Index cell = 0;
      for (int d = 0; d < dim_; ++d) {
        const int ci = idx[d] - ((corner >> d) & 1);
        if (ci < 0 || ci >= cells_[d]) {
          interior = false;
          break;
        }
        cell += ci * cell_stride_[d];
      }
      if (interior && !active_[cell]) interior = false;
    }
    kind_[n] = interior ? NodeKind::interior : NodeKind::boundary;
    (interior ? interior_ : boundary_).push_back(n);
  }
}

DomainPtr Domain::box(const Vec& lower, const Vec& upper, const std::vector<int>& cells) {
  std::shared_ptr<Domain> d(new Domain());
  d->init_grid(lower, upper, cells);
  d->shape_ = DomainShape::box;
  d->finalize();
  return d;
}

DomainPtr Domain::box(const Vec& lower, const Vec& upper, int cells_per_axis) {
  return box(lower, upper, std::vector<int>(lower.size(), cells_per_axis));
}

DomainPtr Domain::wulff_ball(const WulffGeometry& geom, double radius, const Vec& center,
                             int cells_per_axis) {
  if (!(radius > 0.0)) throw InputError("Wulff ball radius must be positive");
  const Vec extent = radius * wulff_extent(geom.gauge);
  std::shared_ptr<Domain> d(new Domain());
  d->init_grid(center - extent, center + extent,
               std::vector<int>(geom.dimension(), cells_per_axis));
  d->shape_ = DomainShape::wulff_ball;
  d->wulff_ = geom;
  d->radius_ = radius;
  d->center_ = center;
  for (Eigen::Index c = 0; c < d->cell_count_; ++c) {
    d->active_[c] = dual_norm(geom.gauge, Vec(d->cell_center(c) - center)) <= radius ? 1 : 0;
  }
  d->finalize();
  return d;
}

DomainPtr Domain::masked_box(const Vec& lower, const Vec& upper, const std::vector<int>& cells,
                             const std::function<bool(const Vec&)>& removed,
                             std::string description) {
  std::shared_ptr<Domain> d(new Domain());
  d->init_grid(lower, upper, cells);
  d->shape_ = DomainShape::masked_box;
  d->description_ = std::move(description);
  for (Eigen::Index c = 0; c < d->cell_count_; ++c) {
    d->active_[c] = removed(d->cell_center(c)) ? 0 : 1;
  }
  d->finalize();
  return d;
}

Vec Domain::node_position(Eigen::Index node) const {
  const auto idx = node_multi_index(node);
  Vec x(dim_);
  for (int d = 0; d < dim_; ++d) x[d] = lower_[d] + idx[d] * h_[d];
  return x;
}

Vec Domain::cell_center(Eigen::Index cell) const {
  Vec x(dim_);
  for (int d = 0; d < dim_; ++d) {
    const Eigen::Index i = (cell / cell_stride_[d]) % cells_[d];
    x[d] = lower_[d] + (i + 0.5) * h_[d];
  }
  return x;
}

Eigen::Index Domain::node_index(const std::array<int, kMaxDim>& idx) const {
  Eigen::Index n = 0;
  for (int d = 0; d < dim_; ++d) n += idx[d] * node_stride_[d];
  return n;
}

std::array<int, kMaxDim> Domain::node_multi_index(Eigen::Index node) const {
  std::array<int, kMaxDim> idx{};
  for (int d = 0; d < dim_; ++d) idx[d] = static_cast<int>((node / node_stride_[d]) % (cells_[d] + 1));
  return idx;
}

Eigen::Index Domain::cell_lower_node(Eigen::Index cell) const {
  Eigen::Index n = 0;
  for (int d = 0; d < dim_; ++d) n += ((cell / cell_stride_[d]) % cells_[d]) * node_stride_[d];
  return n;
}

Eigen::Index Domain::nearest_node(const Vec& x) const {
  std::array<int, kMaxDim> idx{};
  for (int d = 0; d < dim_; ++d) {
    const long i = std::lround((x[d] - lower_[d]) / h_[d]);
    idx[d] = static_cast<int>(std::clamp<long>(i, 0, cells_[d]));
  }
  return node_index(idx);
}

Simplex Domain::simplex(Eigen::Index cell, int s) const {
  Simplex out;
  out.path = &paths_[s];
  out.index = s;
  out.vertex[0] = cell_lower_node(cell);
  for (int j = 0; j < dim_; ++j) out.vertex[j + 1] = out.vertex[j] + node_stride_[(*out.path)[j]];
  return out;
}

void Domain::for_each_simplex(const std::function<void(Eigen::Index, const Simplex&)>& f) const {
  for (Eigen::Index c = 0; c < cell_count_; ++c) {
    if (!active_[c]) continue;
    for (int s = 0; s < simplices_per_cell(); ++s) f(c, simplex(c, s));
  }
}

namespace {

nlohmann::json vec_to_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vec vec_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

nlohmann::json Domain::to_json() const {
  nlohmann::json j{{"shape", to_string(shape_)},
                   {"dimension", dim_},
                   {"lower", vec_to_json(lower_)},
                   {"upper", vec_to_json(upper_)},
                   {"cells", cells_},
                   {"measure", measure_}};
  if (wulff_) {
    j["radius"] = radius_;
    j["center"] = vec_to_json(center_);
    j["gauge"] = wulff_->gauge.id();
    if (wulff_->gauge.family() != GaugeFamily::user) j["gauge_spec"] = to_gauge_spec(wulff_->gauge);
  }
  if (!description_.empty()) j["description"] = description_;
  return j;
}

DomainPtr Domain::from_json(const nlohmann::json& j) {
  const std::string shape = j.at("shape");
  const auto cells = j.at("cells").get<std::vector<int>>();
  if (shape == "box") return box(vec_from_json(j.at("lower")), vec_from_json(j.at("upper")), cells);
  if (shape == "wulff_ball") {
    if (!j.contains("gauge_spec")) throw InputError("Wulff ball descriptor without a gauge spec");
    const auto geom = WulffGeometry::from_gauge(parse_gauge_spec(j.at("gauge_spec")));
    return wulff_ball(geom, j.at("radius"), vec_from_json(j.at("center")), cells.at(0));
  }
  throw InputError("domain shape cannot be rebuilt from a descriptor: " + shape);
}

DomainPtr parse_domain_spec(const std::string& text, const WulffGeometry& geom) {
  const auto kv = parse_key_values(read_spec_text(text));
  auto get = [&](const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  const std::string shape = get("shape", "box");
  const int n = geom.dimension();
  const int cells = std::stoi(get("cells", n == 2 ? "256" : "64"));
  auto as_vec = [&](const std::string& key, double fill) {
    const auto it = kv.find(key);
    if (it == kv.end()) return Vec(Vec::Constant(n, fill));
    const auto v = parse_number_list(it->second);
    if (static_cast<int>(v.size()) != n) throw InputError("domain spec: " + key + " has wrong length");
    return Vec(Eigen::Map<const Vec>(v.data(), n));
  };
  if (shape == "box") return Domain::box(as_vec("lower", -1.0), as_vec("upper", 1.0), cells);
  if (shape == "wulff_ball") {
    return Domain::wulff_ball(geom, std::stod(get("radius", "1")), as_vec("center", 0.0), cells);
  }
  throw InputError("unknown domain shape: " + shape);
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(DomainPtr domain, Eigen::VectorXd values)
    : domain_(std::move(domain)), values_(std::move(values)) {
  if (!domain_) throw InputError("field without a domain");
  if (values_.size() != domain_->node_count()) throw InputError("field size does not match domain");
  if (!values_.allFinite()) throw InputError("field values must be finite");
}

ScalarField ScalarField::constant(DomainPtr domain, double value) {
  const Eigen::Index n = domain->node_count();
  return ScalarField(std::move(domain), Eigen::VectorXd::Constant(n, value));
}

ScalarField ScalarField::from_function(DomainPtr domain,
                                       const std::function<double(const Vec&)>& f) {
  Eigen::VectorXd v(domain->node_count());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = domain->kind(i) == NodeKind::outside ? 0.0 : f(domain->node_position(i));
  }
  return ScalarField(std::move(domain), std::move(v));
}

Eigen::VectorXd ScalarField::boundary_trace() const {
  const auto& b = domain_->boundary_nodes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = values_[b[i]];
  return out;
}

ScalarField ScalarField::map(const std::function<double(double)>& f) const {
  Eigen::VectorXd v = values_;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = domain_->kind(i) == NodeKind::outside ? 0.0 : f(values_[i]);
  }
  return ScalarField(domain_, std::move(v));
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (domain_->kind(i) != NodeKind::outside) m = std::max(m, std::abs(values_[i]));
  }
  return m;
}

double ScalarField::max_over(NodeKind kind) const {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (domain_->kind(i) == kind) m = std::max(m, values_[i]);
  }
  return m;
}

// ---------------------------------------------------------------------------

Vec simplex_gradient(const Domain& domain, const Simplex& s, const Eigen::VectorXd& values) {
  const int n = domain.dimension();
  Vec g(n);
  for (int j = 0; j < n; ++j) {
    const int axis = (*s.path)[j];
    g[axis] = (values[s.vertex[j + 1]] - values[s.vertex[j]]) / domain.spacing()[axis];
  }
  return g;
}

Location locate(const Domain& domain, const Vec& x) {
  const int n = domain.dimension();
  if (x.size() != n) throw InputError("locate: point has the wrong dimension");
  Location loc;
  loc.fraction.resize(n);
  Eigen::Index cell = 0;
  Eigen::Index stride = 1;
  for (int d = 0; d < n; ++d) {
    const double s = (x[d] - domain.lower()[d]) / domain.spacing()[d];
    if (!(s >= -1e-12 && s <= domain.cells(d) + 1e-12)) throw InputError("locate: point outside the grid");
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, domain.cells(d) - 1);
    loc.fraction[d] = std::clamp(s - i, 0.0, 1.0);
    cell += i * stride;
    stride *= domain.cells(d);
  }
  if (!domain.active(cell)) throw InputError("locate: point outside the active cells");
  loc.cell = cell;
  // The Kuhn simplex walks the axes in order of decreasing fraction.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return loc.fraction[a] > loc.fraction[b]; });
  for (int s = 0; s < domain.simplices_per_cell(); ++s) {
    Simplex sx = domain.simplex(cell, s);
    if (*sx.path == order) {
      loc.simplex = sx;
      return loc;
    }
  }
  throw Error("locate: no simplex matches the axis order");
}

double interpolate(const ScalarField& field, const Vec& x) {
  const Domain& d = field.domain();
  const Location loc = locate(d, x);
  const auto& u = field.values();
  double value = u[loc.simplex.vertex[0]];
  for (int j = 0; j < d.dimension(); ++j) {
    const int axis = (*loc.simplex.path)[j];
    value += (u[loc.simplex.vertex[j + 1]] - u[loc.simplex.vertex[j]]) * loc.fraction[axis];
  }
  return value;
}

std::vector<Vec> discrete_gradient(const ScalarField& field) {
  const Domain& dom = field.domain();
  const int n = dom.dimension();
  const auto& u = field.values();
  std::vector<Vec> out(dom.cell_count(), Vec::Zero(n));
  std::array<int, kMaxDim> zero{};
  for (Eigen::Index c = 0; c < dom.cell_count(); ++c) {
    if (!dom.active(c)) continue;
    const Eigen::Index base = dom.cell_lower_node(c);
    for (int d = 0; d < n; ++d) {
      auto unit = zero;
      unit[d] = 1;
      const Eigen::Index step = dom.node_index(unit);
      double sum = 0.0;
      int count = 0;
      for (int corner = 0; corner < (1 << n); ++corner) {
        if ((corner >> d) & 1) continue;
        std::array<int, kMaxDim> off{};
        for (int e = 0; e < n; ++e) off[e] = (corner >> e) & 1;
        const Eigen::Index node = base + dom.node_index(off);
        sum += u[node + step] - u[node];
        ++count;
      }
      out[c][d] = sum / (count * dom.spacing()[d]);
    }
  }
  return out;
}

double integrate(const ScalarField& field) {
  return field.domain().weights().dot(field.values());
}

double integrate_cells(const Domain& domain, const Eigen::VectorXd& cell_values) {
  if (cell_values.size() != domain.cell_count()) throw InputError("one value per cell expected");
  double sum = 0.0;
  for (Eigen::Index c = 0; c < domain.cell_count(); ++c) {
    if (domain.active(c)) sum += cell_values[c];
  }
  return sum * domain.cell_volume();
}

namespace {

// Fraction of a simplex where the linear interpolant of the sorted vertex
// values v[0] <= ... <= v[n] is <= t, and its derivative in t. Each branch
// only divides by gaps that are positive on that branch.
double simplex_cdf(const double* v, int n, double t) {
  if (n == 2) {
    const double a = v[0], b = v[1], c = v[2];
    if (t <= a) return 0.0;
    if (t >= c) return 1.0;
    if (t < b) return (t - a) * (t - a) / ((b - a) * (c - a));
    return 1.0 - (c - t) * (c - t) / ((c - a) * (c - b));
  }
  const double a = v[0], b = v[1], c = v[2], d = v[3];
  if (t <= a) return 0.0;
  if (t >= d) return 1.0;
  if (t < b) return std::pow(t - a, 3) / ((b - a) * (c - a) * (d - a));
  if (t >= c) return 1.0 - std::pow(d - t, 3) / ((d - a) * (d - b) * (d - c));
  const double A = a - t, B = b - t, C = c - t, D = d - t;
  const double q = A * A * B * B - A * A * B * C - A * A * B * D + A * A * C * D - A * B * B * C -
                   A * B * B * D + A * B * C * D + B * B * C * D;
  return q / ((c - a) * (d - a) * (c - b) * (d - b));
}

double simplex_pdf(const double* v, int n, double t) {
  if (n == 2) {
    const double a = v[0], b = v[1], c = v[2];
    if (t <= a || t >= c) return 0.0;
    if (t < b) return 2.0 * (t - a) / ((b - a) * (c - a));
    return 2.0 * (c - t) / ((c - a) * (c - b));
  }
  const double a = v[0], b = v[1], c = v[2], d = v[3];
  if (t <= a || t >= d) return 0.0;
  if (t < b) return 3.0 * (t - a) * (t - a) / ((b - a) * (c - a) * (d - a));
  if (t >= c) return 3.0 * (d - t) * (d - t) / ((d - a) * (d - b) * (d - c));
  const double A = a - t, B = b - t, C = c - t, D = d - t;
  return 3.0 * (A * B * C + A * B * D - A * C * D - B * C * D) / ((c - a) * (d - a) * (c - b) * (d - b));
}

void require_p1_dim(const Domain& d) {
  if (d.dimension() != 2 && d.dimension() != 3) throw InputError("P1 level sets need N = 2 or 3");
}

template <typename F>
void for_each_sorted_simplex(const ScalarField& field, F&& f) {
  const Domain& dom = field.domain();
  const auto& u = field.values();
  const int n = dom.dimension();
  std::array<double, kMaxDim + 1> v{};
  dom.for_each_simplex([&](Eigen::Index, const Simplex& s) {
    for (int j = 0; j <= n; ++j) v[j] = u[s.vertex[j]];
    std::sort(v.begin(), v.begin() + n + 1);
    f(s, v.data());
  });
}

}  // namespace

double superlevel_measure(const ScalarField& field, double t) {
  require_p1_dim(field.domain());
  const int n = field.domain().dimension();
  double sum = 0.0;
  for_each_sorted_simplex(field, [&](const Simplex&, const double* v) {
    sum += 1.0 - simplex_cdf(v, n, t);
  });
  return sum * field.domain().simplex_volume();
}

LevelSetProfile distribution_function(const ScalarField& field,
                                      const std::vector<double>& thresholds, LevelMeasure mode) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw InputError("distribution_function: thresholds must be increasing");
  }
  LevelSetProfile out;
  out.thresholds = thresholds;
  out.measures.assign(thresholds.size(), 0.0);
  const Domain& dom = field.domain();
  const auto& u = field.values();
  if (mode == LevelMeasure::lumped) {
    // Cumulative count over magnitudes sorted once.
    std::vector<std::pair<double, double>> mw;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (dom.weights()[i] > 0.0) mw.emplace_back(std::abs(u[i]), dom.weights()[i]);
    }
    std::sort(mw.begin(), mw.end());
    std::vector<double> tail(mw.size() + 1, 0.0);
    for (std::size_t i = mw.size(); i-- > 0;) tail[i] = tail[i + 1] + mw[i].second;
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
      const auto it = std::upper_bound(mw.begin(), mw.end(), std::make_pair(thresholds[j], 1e300));
      out.measures[j] = tail[it - mw.begin()];
    }
  } else {
    require_p1_dim(dom);
    const int n = dom.dimension();
    for_each_sorted_simplex(field, [&](const Simplex&, const double* v) {
      for (std::size_t j = 0; j < thresholds.size(); ++j) {
        const double t = thresholds[j];
        if (t < 0.0) {
          out.measures[j] += 1.0;
        } else {
          out.measures[j] += 1.0 - simplex_cdf(v, n, t) + simplex_cdf(v, n, -t);
        }
      }
    });
    for (auto& m : out.measures) m *= dom.simplex_volume();
    // Round-off can break monotonicity by an ulp; restore it.
    for (std::size_t j = 1; j < out.measures.size(); ++j) {
      out.measures[j] = std::min(out.measures[j], out.measures[j - 1]);
    }
  }
  return out;
}

double level_set_perimeter(const ScalarField& field, double t, const FinslerGauge& gauge) {
  const Domain& dom = field.domain();
  require_p1_dim(dom);
  const int n = dom.dimension();
  double sum = 0.0;
  for_each_sorted_simplex(field, [&](const Simplex& s, const double* v) {
    const double rho = simplex_pdf(v, n, t);
    if (rho > 0.0) sum += rho * norm(gauge, simplex_gradient(dom, s, field.values()));
  });
  return sum * dom.simplex_volume();
}

double abs_level_set_perimeter(const ScalarField& field, double t, const FinslerGauge& gauge) {
  const Domain& dom = field.domain();
  require_p1_dim(dom);
  const int n = dom.dimension();
  double sum = 0.0;
  for_each_sorted_simplex(field, [&](const Simplex& s, const double* v) {
    const double rho = simplex_pdf(v, n, t) + simplex_pdf(v, n, -t);
    if (rho > 0.0) sum += rho * norm(gauge, simplex_gradient(dom, s, field.values()));
  });
  return sum * dom.simplex_volume();
}

double anisotropic_perimeter(const Domain& domain, const std::vector<char>& cell_set,
                             const FinslerGauge& gauge) {
  if (static_cast<Eigen::Index>(cell_set.size()) != domain.cell_count()) {
    throw InputError("anisotropic_perimeter: one flag per cell expected");
  }
  const int n = domain.dimension();
  auto member = [&](Eigen::Index c) { return cell_set[c] && domain.active(c); };
  double sum = 0.0;
  for (int d = 0; d < n; ++d) {
    Vec e = Vec::Zero(n);
    e[d] = 1.0;
    const double face = domain.cell_volume() / domain.spacing()[d] * norm(gauge, e);
    Eigen::Index stride = 1;
    for (int k = 0; k < d; ++k) stride *= domain.cells(k);
    for (Eigen::Index c = 0; c < domain.cell_count(); ++c) {
      const int i = static_cast<int>((c / stride) % domain.cells(d));
      const bool in = member(c);
      // Faces on the low side of the grid.
      if (i == 0 && in) sum += face;
      const bool next = (i + 1 < domain.cells(d)) ? member(c + stride) : false;
      if (in != next) sum += face;
    }
  }
  return sum;
}

double gradient_power_integral(const ScalarField& field, const FinslerGauge& gauge, double p) {
  const Domain& dom = field.domain();
  double sum = 0.0;
  dom.for_each_simplex([&](Eigen::Index, const Simplex& s) {
    const double f = norm(gauge, simplex_gradient(dom, s, field.values()));
    sum += p == 1.0 ? f : std::pow(f, p);
  });
  return sum * dom.simplex_volume();
}

double anisotropic_tv(const ScalarField& field, const FinslerGauge& gauge) {
  return gradient_power_integral(field, gauge, 1.0);
}

double coarea_integral(const ScalarField& field, const FinslerGauge& gauge, int panels) {
  const double top = field.max_abs();
  if (top == 0.0) return 0.0;
  return integrate_composite([&](double t) { return abs_level_set_perimeter(field, t, gauge); },
                             0.0, top, panels, 4);
}

// ---------------------------------------------------------------------------

namespace {

void write_sidecar(const ScalarField& field, const std::string& path, const std::string& format,
                   const std::string& gauge_id) {
  nlohmann::json j{{"format", format},
                   {"domain", field.domain().to_json()},
                   {"node_count", field.size()}};
  if (!gauge_id.empty()) j["gauge"] = gauge_id;
  std::ofstream out(path + ".json");
  if (!out) throw InputError("cannot write " + path + ".json");
  out << j.dump(2) << "\n";
}

}  // namespace

void write_field_csv(const ScalarField& field, const std::string& path,
                     const std::string& gauge_id) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  const Domain& dom = field.domain();
  for (int d = 0; d < dom.dimension(); ++d) out << "x" << d << ",";
  out << "value\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    const Vec x = dom.node_position(i);
    for (int d = 0; d < dom.dimension(); ++d) out << x[d] << ",";
    out << field[i] << "\n";
  }
  write_sidecar(field, path, "csv", gauge_id);
}

void write_field_binary(const ScalarField& field, const std::string& path,
                        const std::string& gauge_id) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(field.values().data()),
            static_cast<std::streamsize>(field.size() * sizeof(double)));
  write_sidecar(field, path, "binary", gauge_id);
}

ScalarField read_field(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw InputError("missing sidecar " + path + ".json");
  const auto j = nlohmann::json::parse(side);
  DomainPtr dom = Domain::from_json(j.at("domain"));
  Eigen::VectorXd v(dom->node_count());
  const std::string format = j.at("format");
  if (format == "binary") {
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw InputError("truncated field file " + path);
  } else if (format == "csv") {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!std::getline(in, line)) throw InputError("truncated field file " + path);
      v[i] = std::stod(line.substr(line.rfind(',') + 1));
    }
  } else {
    throw InputError("unknown field format: " + format);
  }
  return ScalarField(dom, std::move(v));
}

}  // namespace fl
