#include "overcount/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace overcount {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.1;
constexpr double kMaxLogU = 700.0;
constexpr double kMaxAtanhU = 17.0;
constexpr int kMaxBacktracks = 60;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

void BoxSpec::add_free(std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    lower.push_back(-std::numeric_limits<double>::infinity());
    upper.push_back(std::numeric_limits<double>::infinity());
    transform.push_back(Transform::identity);
  }
}

void BoxSpec::add_positive(std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    lower.push_back(0.0);
    upper.push_back(std::numeric_limits<double>::infinity());
    transform.push_back(Transform::log);
  }
}

void BoxSpec::add_interval(double lo, double hi, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    lower.push_back(lo);
    upper.push_back(hi);
    transform.push_back(Transform::atanh);
  }
}

BoxSpec BoxSpec::unbounded(std::size_t n) {
  BoxSpec b;
  b.add_free(n);
  return b;
}

BoxSpec BoxSpec::positive(std::size_t n) {
  BoxSpec b;
  b.add_positive(n);
  return b;
}

BoxSpec BoxSpec::interval(std::size_t n, double lo, double hi) {
  BoxSpec b;
  b.add_interval(lo, hi, n);
  return b;
}

void BoxSpec::validate() const {
  if (lower.size() != transform.size() || upper.size() != transform.size()) {
    throw std::invalid_argument("BoxSpec: bound and transform lengths differ");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    const double lo = lower[i], hi = upper[i];
    if (!(lo < hi)) throw std::invalid_argument("BoxSpec: lower >= upper at " + std::to_string(i));
    switch (transform[i]) {
      case Transform::identity:
        if (std::isfinite(lo) || std::isfinite(hi)) {
          throw std::invalid_argument("BoxSpec: identity coordinate must be unbounded");
        }
        break;
      case Transform::log:
        if (std::isfinite(lo) == std::isfinite(hi)) {
          throw std::invalid_argument("BoxSpec: log transform needs exactly one finite bound");
        }
        break;
      case Transform::atanh:
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
          throw std::invalid_argument("BoxSpec: atanh transform needs finite bounds");
        }
        break;
    }
  }
}

bool BoxSpec::strictly_feasible(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const double v = x[static_cast<Eigen::Index>(i)];
    if (!std::isfinite(v) || !(v > lower[i]) || !(v < upper[i])) return false;
  }
  return true;
}

Eigen::VectorXd BoxSpec::to_unconstrained(const Eigen::VectorXd& x) const {
  Eigen::VectorXd u(x.size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    switch (transform[i]) {
      case Transform::identity: u[e] = x[e]; break;
      case Transform::log:
        u[e] = std::isfinite(lower[i]) ? std::log(x[e] - lower[i]) : std::log(upper[i] - x[e]);
        u[e] = std::clamp(u[e], -kMaxLogU, kMaxLogU);
        break;
      case Transform::atanh: {
        const double mid = 0.5 * (lower[i] + upper[i]);
        const double half = 0.5 * (upper[i] - lower[i]);
        u[e] = std::clamp(std::atanh((x[e] - mid) / half), -kMaxAtanhU, kMaxAtanhU);
        break;
      }
    }
  }
  return u;
}

Eigen::VectorXd BoxSpec::from_unconstrained(const Eigen::VectorXd& u) const {
  Eigen::VectorXd x(u.size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    switch (transform[i]) {
      case Transform::identity: x[e] = u[e]; break;
      case Transform::log: {
        const double t = std::exp(std::clamp(u[e], -kMaxLogU, kMaxLogU));
        x[e] = std::isfinite(lower[i]) ? lower[i] + t : upper[i] - t;
        break;
      }
      case Transform::atanh: {
        const double mid = 0.5 * (lower[i] + upper[i]);
        const double half = 0.5 * (upper[i] - lower[i]);
        x[e] = mid + half * std::tanh(std::clamp(u[e], -kMaxAtanhU, kMaxAtanhU));
        break;
      }
    }
  }
  return x;
}

Eigen::VectorXd BoxSpec::jacobian(const Eigen::VectorXd& u) const {
  Eigen::VectorXd d(u.size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    switch (transform[i]) {
      case Transform::identity: d[e] = 1.0; break;
      case Transform::log: {
        if (std::abs(u[e]) > kMaxLogU) {
          d[e] = 0.0;
          break;
        }
        const double t = std::exp(u[e]);
        d[e] = std::isfinite(lower[i]) ? t : -t;
        break;
      }
      case Transform::atanh: {
        if (std::abs(u[e]) > kMaxAtanhU) {
          d[e] = 0.0;
          break;
        }
        const double half = 0.5 * (upper[i] - lower[i]);
        const double th = std::tanh(u[e]);
        d[e] = half * (1.0 - th * th);
        break;
      }
    }
  }
  return d;
}

Minimizer::Minimizer(BoxSpec box) : box_(std::move(box)) { box_.validate(); }

OptimResult Minimizer::minimize(const Objective& objective, const Eigen::VectorXd& x0,
                                double tol, int max_iter) {
  const auto n = static_cast<Eigen::Index>(box_.size());
  if (x0.size() != n) throw std::invalid_argument("minimize: x0 has wrong dimension");
  if (!box_.strictly_feasible(x0)) {
    throw std::invalid_argument("minimize: x0 is not strictly feasible");
  }

  Eigen::VectorXd grad_x(n);
  // Objective and gradient in unconstrained coordinates.
  auto eval = [&](const Eigen::VectorXd& u, Eigen::VectorXd& x, Eigen::VectorXd& g) {
    x = box_.from_unconstrained(u);
    grad_x.setZero();
    const double f = objective(x, grad_x);
    g = grad_x.cwiseProduct(box_.jacobian(u));
    return f;
  };

  Eigen::VectorXd u = box_.to_unconstrained(x0);
  Eigen::VectorXd x(n), g(n);
  double f = eval(u, x, g);
  if (!std::isfinite(f) || !all_finite(g)) {
    throw std::invalid_argument("minimize: objective or gradient not finite at x0");
  }

  if (!warm_ || inv_hessian_.rows() != n) {
    inv_hessian_ = Eigen::MatrixXd::Identity(n, n);
    warm_ = false;
  }
  bool fresh = !warm_;

  OptimResult res;
  res.trace.push_back(f);
  Eigen::VectorXd u_new(n), x_new(n), g_new(n);

  int it = 0;
  for (; it < max_iter; ++it) {
    if (g.norm() <= tol) break;

    Eigen::VectorXd d = -inv_hessian_ * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      inv_hessian_.setIdentity();
      fresh = true;
      d = -g;
      slope = g.dot(d);
    }

    // First step on an unscaled identity: keep the trial step length moderate.
    double step = fresh ? std::min(1.0, 1.0 / std::max(g.norm(), 1e-300)) : 1.0;
    bool accepted = false;
    double f_new = f;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      u_new = u + step * d;
      f_new = eval(u_new, x_new, g_new);
      if (std::isfinite(f_new) && all_finite(g_new) && f_new <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        // Stale curvature; retry from steepest descent before giving up.
        inv_hessian_.setIdentity();
        fresh = true;
        --it;
        continue;
      }
      res.message = "line search failed";
      break;
    }

    // Secant refinement along d, exact on quadratics.
    const double slope_new = g_new.dot(d);
    if (std::abs(slope_new) > kCurvature * std::abs(slope)) {
      const double t = step * slope / (slope - slope_new);
      if (std::isfinite(t) && t > 0.0 && t <= 10.0 * step && std::abs(t - step) > 1e-3 * step) {
        Eigen::VectorXd u_ref = u + t * d, x_ref(n), g_ref(n);
        const double f_ref = eval(u_ref, x_ref, g_ref);
        if (std::isfinite(f_ref) && all_finite(g_ref) && f_ref < f_new &&
            f_ref <= f + kArmijo * t * slope) {
          step = t;
          u_new = u_ref;
          x_new = x_ref;
          g_new = g_ref;
          f_new = f_ref;
        }
      }
    }

    const Eigen::VectorXd s = u_new - u;
    Eigen::VectorXd y = g_new - g;
    // B s = -step * g for the current inverse-Hessian approximation.
    const double sBs = -step * s.dot(g);
    double sy = s.dot(y);
    if (sy < 0.2 * sBs) {
      const double theta = 0.8 * sBs / (sBs - sy);
      y = theta * y + (1.0 - theta) * (-step * g);
      sy = s.dot(y);
    }
    if (sy > 1e-300 && std::isfinite(sy)) {
      if (fresh) {
        inv_hessian_ = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = inv_hessian_ * y;
      const double yHy = y.dot(Hy);
      inv_hessian_ += ((1.0 + rho * yHy) * rho) * (s * s.transpose()) -
                      rho * (Hy * s.transpose() + s * Hy.transpose());
    }

    u = u_new;
    x = x_new;
    g = g_new;
    f = f_new;
    res.trace.push_back(f);
  }

  warm_ = true;
  res.x = x;
  res.f = f;
  res.grad_norm = g.norm();
  res.iterations = it;
  res.converged = res.grad_norm <= tol;
  if (res.message.empty()) res.message = res.converged ? "converged" : "iteration limit";
  return res;
}

OptimResult minimize(const Objective& objective, const Eigen::VectorXd& x0, const BoxSpec& box,
                     double tol, int max_iter) {
  Minimizer minimizer(box);
  return minimizer.minimize(objective, x0, tol, max_iter);
}

double check_gradient(const Objective& objective, const Eigen::VectorXd& x, double h) {
  const auto n = x.size();
  Eigen::VectorXd g(n), scratch(n);
  g.setZero();
  objective(x, g);
  double worst = 0.0;
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    scratch.setZero();
    const double fp = objective(xp, scratch);
    scratch.setZero();
    const double fm = objective(xm, scratch);
    xp[i] = x[i];
    xm[i] = x[i];
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(g[i] - fd) / (1.0 + std::abs(g[i])));
  }
  return worst;
}

}  // namespace overcount
