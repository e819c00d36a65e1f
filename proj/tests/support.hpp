#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "overcount/counts.hpp"
#include "overcount/models.hpp"
#include "overcount/params.hpp"

namespace overcount::testkit {

/// Calls f for every composition of m into p nonnegative parts.
inline void for_each_composition(count_t m, std::size_t p,
                                 const std::function<void(const std::vector<count_t>&)>& f) {
  std::vector<count_t> y(p, 0);
  std::function<void(std::size_t, count_t)> rec = [&](std::size_t j, count_t left) {
    if (j + 1 == p) {
      y[j] = left;
      f(y);
      return;
    }
    for (count_t v = 0; v <= left; ++v) {
      y[j] = v;
      rec(j + 1, left - v);
    }
  };
  rec(0, m);
}

/// Sum of exp(logpmf) over all compositions of m (one fixed total).
inline double total_mass(const FamilyParams& params, count_t m, std::size_t p) {
  double s = 0.0;
  for_each_composition(m, p, [&](const std::vector<count_t>& y) {
    s += std::exp(logpmf(params, y));
  });
  return s;
}

inline Eigen::VectorXd random_simplex(std::size_t p, std::mt19937_64& rng, double floor = 0.02) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = u(rng);
  return v / v.sum();
}

inline Eigen::VectorXd random_positive(std::size_t p, std::mt19937_64& rng, double lo = 0.2,
                                       double hi = 5.0) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Eigen::VectorXd v(static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = std::exp(u(rng));
  return v;
}

inline DdmParams random_ddm(std::size_t p, std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-0.9, 0.9);
  DdmParams d;
  d.w = random_simplex(k, rng, 0.1);
  d.beta = random_positive(p, rng);
  d.alpha.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < d.alpha.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.alpha.cols(); ++j) d.alpha(i, j) = a(rng);
  }
  return d;
}

/// One random valid parameter set of the given family with p categories.
inline FamilyParams random_params(Family family, std::size_t p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  switch (family) {
    case Family::mn: return MnParams{random_simplex(p, rng)};
    case Family::dm: return DmParams{random_positive(p, rng)};
    case Family::rcm: return RcmParams{random_simplex(p, rng), u(rng)};
    case Family::nm: {
      Eigen::VectorXd pi = random_simplex(p + 1, rng);
      // Keep the failure probability large enough for a short tail.
      pi[static_cast<Eigen::Index>(p)] += 1.5;
      pi /= pi.sum();
      return NmParams{pi, std::exp(std::uniform_real_distribution<double>(-1.0, 1.0)(rng))};
    }
    case Family::gdm: return GdmParams{random_positive(p - 1, rng), random_positive(p - 1, rng)};
    case Family::ddm: return random_ddm(p, 2 + rng() % 2, rng);
  }
  return MnParams{};
}

/// Largest |analytic - Monte Carlo| / standard error over the mean vector and
/// the covariance entries (off-diagonals optional).
struct MomentCheck {
  double worst_mean_z = 0.0;
  double worst_cov_z = 0.0;
};

inline MomentCheck compare_moments(const Moments& analytic, const CountMatrix& draws,
                                   bool include_offdiag = true) {
  const auto n = static_cast<Eigen::Index>(draws.rows());
  const auto p = static_cast<Eigen::Index>(draws.cols());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      x(i, j) = static_cast<double>(draws(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    }
  }
  const double nd = static_cast<double>(n);
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd c = x.rowwise() - mean.transpose();
  MomentCheck out;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var = c.col(j).squaredNorm() / (nd - 1.0);
    const double se = std::sqrt(var / nd);
    const double diff = std::abs(mean[j] - analytic.mean[j]);
    out.worst_mean_z = std::max(out.worst_mean_z, se > 0.0 ? diff / se : (diff > 1e-12 ? 1e9 : 0.0));
  }
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a; b < p; ++b) {
      if (a != b && !include_offdiag) continue;
      const Eigen::ArrayXd prod = c.col(a).array() * c.col(b).array();
      const double est = prod.sum() / (nd - 1.0);
      const double se = std::sqrt((prod - prod.mean()).square().sum() / (nd - 1.0) / nd);
      const double diff = std::abs(est - analytic.cov(a, b));
      out.worst_cov_z = std::max(out.worst_cov_z, se > 0.0 ? diff / se : (diff > 1e-12 ? 1e9 : 0.0));
    }
  }
  return out;
}

inline const std::vector<Family>& all_families() {
  static const std::vector<Family> f{Family::mn,  Family::dm,  Family::rcm,
                                     Family::nm,  Family::gdm, Family::ddm};
  return f;
}

}  // namespace overcount::testkit
