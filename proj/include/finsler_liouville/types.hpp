#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>

namespace fl {

/// Largest ambient dimension supported by the gauge kernels. Small vectors and
/// matrices live on the stack up to this size.
inline constexpr int kMaxDim = 8;

template <typename Scalar>
using VecN = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

template <typename Scalar>
using MatN = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

using Vec = VecN<double>;
using Mat = MatN<double>;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or inconsistent inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a singular point (gauge gradient at the origin, pole of a
/// fundamental solution, ...).
class SingularPointError : public Error {
 public:
  using Error::Error;
};

/// Quadrature that did not reach its tolerance. Carries the last estimate.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double estimate, double achieved_error)
      : Error(what), estimate_(estimate), achieved_error_(achieved_error) {}
  double estimate() const { return estimate_; }
  double achieved_error() const { return achieved_error_; }

 private:
  double estimate_;
  double achieved_error_;
};

/// Iterative maximization or root solve that did not converge. Carries the
/// best value found and a bound on its distance to the true value.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_value, double gap_bound)
      : Error(what), best_value_(best_value), gap_bound_(gap_bound) {}
  double best_value() const { return best_value_; }
  double gap_bound() const { return gap_bound_; }

 private:
  double best_value_;
  double gap_bound_;
};

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace fl
