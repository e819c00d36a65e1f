#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace overcount {

/// Objective for minimization: returns f(x) and writes df/dx into grad
/// (already sized to x.size()).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Per-coordinate reparameterization used to keep iterates strictly feasible.
enum class Transform {
  identity,  ///< unbounded coordinate
  log,       ///< x = lower + exp(u), or upper - exp(u) when only upper is finite
  atanh,     ///< x = mid + half_width * tanh(u) on an open interval
};

/// Bounds and transforms for each coordinate.
struct BoxSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Transform> transform;

  std::size_t size() const { return transform.size(); }

  void add_free(std::size_t count = 1);
  void add_positive(std::size_t count = 1);
  void add_interval(double lo, double hi, std::size_t count = 1);

  static BoxSpec unbounded(std::size_t n);
  static BoxSpec positive(std::size_t n);
  static BoxSpec interval(std::size_t n, double lo, double hi);

  /// Throws std::invalid_argument on inconsistent bounds.
  void validate() const;
  bool strictly_feasible(const Eigen::VectorXd& x) const;

  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& u) const;
  /// dx/du, elementwise.
  Eigen::VectorXd jacobian(const Eigen::VectorXd& u) const;
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  /// Gradient norm in the unconstrained coordinates.
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective value after each accepted step, starting with f(x0).
  std::vector<double> trace;
  std::string message;
};

/// Quasi-Newton (BFGS) minimizer over transformed coordinates with a
/// backtracking Armijo line search (c = 1e-4) and Powell-damped updates.
///
/// The inverse-Hessian approximation persists across minimize() calls with
/// the same dimension, so a sequence of closely related problems (EM M-steps)
/// can be warm-started. Instances are not shareable between threads.
class Minimizer {
 public:
  explicit Minimizer(BoxSpec box);

  /// x0 must be strictly feasible and give a finite objective and gradient
  /// (std::invalid_argument otherwise). Returns the best iterate; on line
  /// search failure the result has converged == false.
  OptimResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                       double tol = 1e-6, int max_iter = 500);

  void reset() { warm_ = false; }
  const BoxSpec& box() const { return box_; }

 private:
  BoxSpec box_;
  Eigen::MatrixXd inv_hessian_;
  bool warm_ = false;
};

OptimResult minimize(const Objective& objective, const Eigen::VectorXd& x0, const BoxSpec& box,
                     double tol = 1e-6, int max_iter = 500);

/// max_i |g_i - fd_i| / (1 + |g_i|), with fd the central difference of step h.
double check_gradient(const Objective& objective, const Eigen::VectorXd& x, double h = 1e-6);

}  // namespace overcount
