#pragma once

// Unchecked kernels shared by the public log-pmfs and the fitters.

#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "overcount/counts.hpp"
#include "overcount/specfun.hpp"

namespace overcount::detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// y * log(q) with 0 * log(0) = 0.
inline double xlogy(double y, double q) {
  if (y == 0.0) return 0.0;
  return q > 0.0 ? y * std::log(q) : kNegInf;
}

inline double log_sum_exp(std::span<const double> v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

/// log DM(y; theta) without the multinomial coefficient.
inline double dm_kernel(const Eigen::Ref<const Eigen::VectorXd>& theta, double theta0,
                        std::span<const count_t> y, count_t m) {
  double s = -log_rising(theta0, static_cast<double>(m));
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] != 0) s += log_rising(theta[static_cast<Eigen::Index>(j)], static_cast<double>(y[j]));
  }
  return s;
}

void check_dims(std::size_t expected, std::size_t got);

}  // namespace overcount::detail
