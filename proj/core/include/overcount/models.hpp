#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "overcount/counts.hpp"
#include "overcount/params.hpp"

namespace overcount {

// Log probability mass functions. The size m is the row total of y. All
// return -infinity for observations outside the support and throw
// std::domain_error on invalid parameters or a dimension mismatch.

double mn_logpmf(const MnParams& params, std::span<const count_t> y);
double dm_logpmf(const DmParams& params, std::span<const count_t> y);
/// Mixture over j of pi_j * Multinomial((1 - rho) pi + rho e_j).
double rcm_logpmf(const RcmParams& params, std::span<const count_t> y);
/// Here the total m is a realization of the random number of successes.
double nm_logpmf(const NmParams& params, std::span<const count_t> y);
double gdm_logpmf(const GdmParams& params, std::span<const count_t> y);
double ddm_logpmf(const DdmParams& params, std::span<const count_t> y);

double logpmf(const FamilyParams& params, std::span<const count_t> y);

/// log(m! / prod y_j!)
double log_multinomial_coefficient(std::span<const count_t> y);

/// Model-implied mean and covariance at size m.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  /// Monte-Carlo draws behind any off-diagonal entries; 0 when every entry
  /// is analytic (the case for all families here).
  std::size_t offdiag_mc_samples = 0;

  Eigen::VectorXd variances() const { return cov.diagonal(); }
};

/// Analytic moments. The negative multinomial total is random, so its
/// moments depend only on (pi, beta) and m is ignored.
Moments moments(const FamilyParams& params, count_t m);

/// n independent draws at size m, deterministic in seed. For the negative
/// multinomial each row total is random and m is ignored.
CountMatrix sample(const FamilyParams& params, count_t m, std::size_t n, std::uint64_t seed);

/// Moment generating function E[exp(t . Y)] of a deep Dirichlet-multinomial
/// at size m, 1 <= m <= 200 (std::domain_error otherwise). Throws std::range_error on overflow.
double ddm_mgf(const DdmParams& params, count_t m, std::span<const double> t);

}  // namespace overcount
