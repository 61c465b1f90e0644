#pragma once

// Discrete N-anisotropic Laplacian on P1 grids.
//
// The discrete energy is
//   J(u) = (1/N) sum_T |T| (F_eps(grad u_T)^N - eps^N) - sum_i w_i G_i(u_i),
// F_eps = sqrt(F^2 + eps^2), with G_i(u) = f_i u for the Poisson problem and
// s V_i e^u for the Liouville problem. Its gradient at node i divided by the
// lumped weight w_i is the strong residual -Q_N u - f (or - V e^u). Dirichlet
// nodes are the domain's boundary nodes.

#include "finsler_liouville/field.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fl {

struct SolverConfig {
  /// Gauge regularisation. Negative selects 1e-6 times the natural gradient
  /// scale of the problem.
  double eps = -1.0;
  /// Solve first with larger eps (10x per stage) and warm start; only used
  /// when the operator is not quadratic (N > 2).
  bool eps_continuation = true;
  /// Stop when max_i |r_i| / w_i <= tol * max(1, |source|_inf).
  double tol = 1e-8;
  int max_iterations = 100;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  double linear_tol = 1e-10;
  int max_linear_iterations = 20000;
  /// Liouville load continuation: geometric steps from s = 10^{-3} to 1.
  int continuation_steps = 20;
  /// Smallest admissible relative load step before giving up.
  double continuation_floor = 1e-3;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;          ///< Newton iterations, all stages
  int linear_iterations = 0;   ///< CG iterations, all stages
  double residual_norm = 0.0;  ///< final max_i |r_i| / w_i over free nodes
  double eps = 0.0;            ///< regularisation actually used
  std::vector<double> energy_history;
  std::string message;
  double load = 1.0;  ///< Liouville: last load parameter reached
};

/// Raised by solve_liouville when continuation stalls, typically near the
/// fold of the minimal branch. `last_load` is the largest s that converged.
class ContinuationError : public Error {
 public:
  ContinuationError(const std::string& what, double last_load)
      : Error(what), last_load_(last_load) {}
  double last_load() const { return last_load_; }

 private:
  double last_load_;
};

/// F_eps^N / N and its derivatives at xi, N the gauge dimension.
struct RegularizedIntegrand {
  double value;  ///< (F_eps^N - eps^N) / N
  Vec flux;      ///< F_eps^{N-2} F grad F
};
RegularizedIntegrand regularized_integrand(const FinslerGauge& gauge, const Vec& xi, double eps);
/// Hessian of F_eps^N / N; at xi = 0 the 0-homogeneous Hess(F^2/2) is taken
/// along (1,...,1)/sqrt(N).
Mat regularized_hessian(const FinslerGauge& gauge, const Vec& xi, double eps);

/// J(u) with source term f u.
double energy(const ScalarField& u, const ScalarField& f, const FinslerGauge& gauge, double eps);

/// Strong residual -Q_N^h u - f at free nodes, zero at boundary and outside
/// nodes.
ScalarField residual(const ScalarField& u, const ScalarField& f, const FinslerGauge& gauge,
                     double eps);

/// Minimises J over fields with the boundary values of g; interior values of
/// g are used as the initial guess. f = 0 gives the Q_N-harmonic extension.
/// Throws ConvergenceError when the line search fails.
std::pair<ScalarField, SolveReport> solve_poisson(const ScalarField& f, const ScalarField& g,
                                                  const FinslerGauge& gauge,
                                                  const SolverConfig& config = {});

/// -Q_N u = V e^u with u = g on the boundary, by Newton on the minimal branch
/// with load continuation s V, s: 10^{-3} -> 1. Throws ContinuationError
/// carrying the last converged load when continuation stalls.
std::pair<ScalarField, SolveReport> solve_liouville(const ScalarField& V, const ScalarField& g,
                                                    const FinslerGauge& gauge,
                                                    const SolverConfig& config = {});

nlohmann::json to_json(const SolveReport& report);

}  // namespace fl
