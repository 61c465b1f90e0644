#pragma once

// Structured grids, nodal fields and the P1 calculus on them.
//
// A domain is a box [lower, upper] split into n_i cells per axis; some cells
// may be inactive (Wulff ball mask, removed region). Every cell is cut into N!
// Kuhn simplices: simplex s of a cell visits the corners v_0 = lower corner,
// v_j = v_{j-1} + h_{pi(j)} e_{pi(j)} for the s-th permutation pi. Fields are
// nodal and interpolated linearly on each simplex.

#include "finsler_liouville/finsler_core.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fl {

enum class DomainShape { box, wulff_ball, masked_box };
enum class NodeKind : std::uint8_t { outside, boundary, interior };

std::string to_string(DomainShape shape);

class Domain;
using DomainPtr = std::shared_ptr<const Domain>;

/// Node ids of one Kuhn simplex and its axis path.
struct Simplex {
  std::array<Eigen::Index, kMaxDim + 1> vertex{};
  const std::vector<int>* path = nullptr;  ///< path[j] = axis of edge v_j -> v_{j+1}
  int index = 0;                           ///< position among the cell's N! simplices
};

class Domain {
 public:
  static DomainPtr box(const Vec& lower, const Vec& upper, const std::vector<int>& cells);
  static DomainPtr box(const Vec& lower, const Vec& upper, int cells_per_axis);
  /// W_R(x0) = {F0(x - x0) <= R}, meshed inside its bounding box
  /// x0 +- R F(e_i). A cell is kept when its center lies in W_R.
  static DomainPtr wulff_ball(const WulffGeometry& geom, double radius, const Vec& center,
                              int cells_per_axis);
  /// Box minus the cells whose center satisfies `removed`.
  static DomainPtr masked_box(const Vec& lower, const Vec& upper, const std::vector<int>& cells,
                              const std::function<bool(const Vec&)>& removed,
                              std::string description);

  int dimension() const { return dim_; }
  DomainShape shape() const { return shape_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const Vec& spacing() const { return h_; }
  /// Largest cell edge.
  double h() const { return h_.maxCoeff(); }
  int cells(int axis) const { return cells_[axis]; }
  Eigen::Index cell_count() const { return cell_count_; }
  Eigen::Index node_count() const { return node_count_; }
  double cell_volume() const { return cell_volume_; }
  double simplex_volume() const { return simplex_volume_; }
  /// Sum of active cell volumes.
  double measure() const { return measure_; }

  bool active(Eigen::Index cell) const { return active_[cell] != 0; }
  NodeKind kind(Eigen::Index node) const { return kind_[node]; }
  /// Lumped (mass-matrix row sum) weight of a node; zero outside.
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<Eigen::Index>& interior_nodes() const { return interior_; }
  const std::vector<Eigen::Index>& boundary_nodes() const { return boundary_; }

  Vec node_position(Eigen::Index node) const;
  Vec cell_center(Eigen::Index cell) const;
  /// Index of the node with the given per-axis indices.
  Eigen::Index node_index(const std::array<int, kMaxDim>& idx) const;
  std::array<int, kMaxDim> node_multi_index(Eigen::Index node) const;
  Eigen::Index cell_lower_node(Eigen::Index cell) const;
  /// Nearest node to x (clamped to the grid).
  Eigen::Index nearest_node(const Vec& x) const;

  /// Number of simplices per cell, N!.
  int simplices_per_cell() const { return static_cast<int>(paths_.size()); }
  Simplex simplex(Eigen::Index cell, int s) const;
  /// Calls f(cell, simplex) for every simplex of every active cell, in order.
  void for_each_simplex(const std::function<void(Eigen::Index, const Simplex&)>& f) const;

  /// Wulff ball data, when shape() == wulff_ball.
  const std::optional<WulffGeometry>& wulff() const { return wulff_; }
  double radius() const { return radius_; }
  const Vec& center() const { return center_; }

  /// Descriptor written next to field files.
  nlohmann::json to_json() const;
  /// Rebuilds box and Wulff ball domains (masked boxes cannot be rebuilt).
  static DomainPtr from_json(const nlohmann::json& j);

 private:
  Domain() = default;
  void init_grid(const Vec& lower, const Vec& upper, const std::vector<int>& cells);
  void finalize();

  int dim_ = 0;
  DomainShape shape_ = DomainShape::box;
  Vec lower_, upper_, h_;
  std::vector<int> cells_;
  std::vector<Eigen::Index> node_stride_, cell_stride_;
  Eigen::Index cell_count_ = 0, node_count_ = 0;
  double cell_volume_ = 0.0, simplex_volume_ = 0.0, measure_ = 0.0;
  std::vector<std::uint8_t> active_;
  std::vector<NodeKind> kind_;
  Eigen::VectorXd weights_;
  std::vector<Eigen::Index> interior_, boundary_;
  std::vector<std::vector<int>> paths_;
  std::optional<WulffGeometry> wulff_;
  double radius_ = 0.0;
  Vec center_;
  std::string description_;
};

/// Parses "shape=box; lower=-1,-1; upper=1,1; cells=256" or
/// "shape=wulff_ball; radius=1; center=0,0; cells=256" (the gauge supplies
/// the Wulff geometry and the dimension of a Wulff ball).
DomainPtr parse_domain_spec(const std::string& text, const WulffGeometry& geom);

/// Nodal values on a domain. Values at outside nodes are carried along but
/// never used.
class ScalarField {
 public:
  ScalarField(DomainPtr domain, Eigen::VectorXd values);
  static ScalarField constant(DomainPtr domain, double value);
  static ScalarField from_function(DomainPtr domain, const std::function<double(const Vec&)>& f);

  const Domain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }
  Eigen::Index size() const { return values_.size(); }

  /// Values at the boundary nodes, in Domain::boundary_nodes() order.
  Eigen::VectorXd boundary_trace() const;
  ScalarField map(const std::function<double(double)>& f) const;
  /// Max of |u| over boundary and interior nodes.
  double max_abs() const;
  double max_over(NodeKind kind) const;

 private:
  DomainPtr domain_;
  Eigen::VectorXd values_;
};

/// Gradient of the P1 interpolant on one simplex.
Vec simplex_gradient(const Domain& domain, const Simplex& s, const Eigen::VectorXd& values);

/// Cell and Kuhn simplex containing x, with the fractional cell coordinates.
/// Throws InputError when x lies outside the active cells.
struct Location {
  Eigen::Index cell = 0;
  Simplex simplex;
  Vec fraction;
};
Location locate(const Domain& domain, const Vec& x);

/// Value of the P1 interpolant at x.
double interpolate(const ScalarField& field, const Vec& x);

/// Cell-centred gradient per cell (average of the axis-parallel edge
/// differences); exact for affine fields. Inactive cells get zero.
std::vector<Vec> discrete_gradient(const ScalarField& field);

/// \int u dx with lumped nodal weights; exact for constants and, on boxes,
/// the trapezoid rule.
double integrate(const ScalarField& field);
/// \int of a cellwise constant quantity (one value per cell).
double integrate_cells(const Domain& domain, const Eigen::VectorXd& cell_values);

struct LevelSetProfile {
  std::vector<double> thresholds;
  std::vector<double> measures;
};

enum class LevelMeasure {
  lumped,  ///< sum of nodal weights with |u_i| > t
  p1,      ///< exact measure of {|u_h| > t} for the piecewise linear interpolant
};

/// mu(t_j) = |{|u| > t_j}|. Thresholds must be increasing.
LevelSetProfile distribution_function(const ScalarField& field,
                                      const std::vector<double>& thresholds,
                                      LevelMeasure mode = LevelMeasure::lumped);

/// |{u_h > t}| for the P1 interpolant (signed u, not |u|). N = 2 or 3.
double superlevel_measure(const ScalarField& field, double t);

/// P_F({u_h > t}) for the P1 interpolant: the level set {u_h = t} is planar on
/// each simplex, so P_F = sum_T F(grad u_T) |T| rho_T(t) with rho_T the
/// density of u_h on T. N = 2 or 3.
double level_set_perimeter(const ScalarField& field, double t, const FinslerGauge& gauge);
/// P_F({|u_h| > t}), t > 0.
double abs_level_set_perimeter(const ScalarField& field, double t, const FinslerGauge& gauge);

/// Perimeter of a union of cells (cell_set[c] != 0): sum over faces between a
/// member and a non-member of F(nu) |face|. Measures the crystalline
/// (staircase) perimeter of the cell union, which is exact for axis-aligned
/// sets but does not converge to P_F of curved sets.
double anisotropic_perimeter(const Domain& domain, const std::vector<char>& cell_set,
                             const FinslerGauge& gauge);

/// \int F(grad u_h) dx over the active cells.
double anisotropic_tv(const ScalarField& field, const FinslerGauge& gauge);
/// \int F(grad u_h)^p dx over the active cells.
double gradient_power_integral(const ScalarField& field, const FinslerGauge& gauge, double p);

/// \int_0^{max|u|} P_F({|u_h| > t}) dt. Exact co-area for the P1 interpolant up
/// to the t-quadrature, which uses `panels` Gauss panels between sorted
/// breakpoints.
double coarea_integral(const ScalarField& field, const FinslerGauge& gauge, int panels = 400);

// ---------------------------------------------------------------------------
// Field I/O

/// CSV with columns x_0..x_{N-1},value, one row per node.
void write_field_csv(const ScalarField& field, const std::string& path,
                     const std::string& gauge_id = "");
/// Raw little-endian doubles, with `path + ".json"` describing the domain.
void write_field_binary(const ScalarField& field, const std::string& path,
                        const std::string& gauge_id = "");
/// Reads a field written by either writer. The sidecar `path + ".json"` must
/// exist; its "format" entry selects the parser.
ScalarField read_field(const std::string& path);

}  // namespace fl
