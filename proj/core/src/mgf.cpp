#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "overcount/models.hpp"

namespace overcount {

namespace {

// mgf of DM(theta, m) at s = exp(t). With h_r the coefficient of x^r in
// prod_j (1 - s_j x)^(-theta_j), h_r = (1/r) sum_u P_u h_{r-u} where
// P_u = sum_j theta_j s_j^u, and the mgf is r! Gamma(theta0) / Gamma(r + theta0) h_r.
// The recursion is carried on g_r = r! / (theta0)_r * h_r, which stays O(1)
// at t = 0, so moderate m does not overflow through the prefactor.
double dm_mgf(const Eigen::VectorXd& theta, count_t m, std::span<const double> t) {
  const double theta0 = theta.sum();
  const auto p = theta.size();
  std::vector<double> power_sums(static_cast<std::size_t>(m) + 1, 0.0);
  for (count_t u = 1; u <= m; ++u) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      s += theta[j] * std::exp(t[static_cast<std::size_t>(j)] * static_cast<double>(u));
    }
    power_sums[static_cast<std::size_t>(u)] = s;
  }
  std::vector<double> g(static_cast<std::size_t>(m) + 1, 0.0);
  g[0] = 1.0;
  for (count_t r = 1; r <= m; ++r) {
    double acc = 0.0;
    double ratio = 1.0 / static_cast<double>(r);  // (1/r) prod_{q<u} (r - q) / (theta0 + r - 1 - q)
    for (count_t u = 1; u <= r; ++u) {
      ratio *= static_cast<double>(r - u + 1) / (theta0 + static_cast<double>(r - u));
      acc += power_sums[static_cast<std::size_t>(u)] * ratio * g[static_cast<std::size_t>(r - u)];
    }
    g[static_cast<std::size_t>(r)] = acc;
  }
  return g[static_cast<std::size_t>(m)];
}

}  // namespace

double ddm_mgf(const DdmParams& params, count_t m, std::span<const double> t) {
  validate(params);
  if (m < 1 || m > 200) throw std::domain_error("ddm_mgf supports 1 <= m <= 200");
  if (t.size() != params.categories()) {
    throw std::domain_error("t has " + std::to_string(t.size()) + " entries, expected " +
                            std::to_string(params.categories()));
  }
  double out = 0.0;
  for (std::size_t k = 0; k < params.components(); ++k) {
    out += params.w[static_cast<Eigen::Index>(k)] * dm_mgf(params.theta(k), m, t);
  }
  if (!std::isfinite(out)) throw std::range_error("ddm_mgf overflow");
  return out;
}

}  // namespace overcount
