#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "detail.hpp"
#include "overcount/models.hpp"

namespace overcount {

using detail::kNegInf;
using detail::xlogy;

void detail::check_dims(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw std::domain_error("dimension mismatch: parameters have " + std::to_string(expected) +
                            " categories, observation has " + std::to_string(got));
  }
}

double log_multinomial_coefficient(std::span<const count_t> y) {
  double s = log_gamma(static_cast<double>(total(y)) + 1.0);
  for (count_t v : y) {
    if (v > 1) s -= log_gamma(static_cast<double>(v) + 1.0);
  }
  return s;
}

double mn_logpmf(const MnParams& params, std::span<const count_t> y) {
  validate(params);
  detail::check_dims(params.pi.size(), y.size());
  double s = log_multinomial_coefficient(y);
  for (std::size_t j = 0; j < y.size(); ++j) {
    s += xlogy(static_cast<double>(y[j]), params.pi[static_cast<Eigen::Index>(j)]);
  }
  return s;
}

double dm_logpmf(const DmParams& params, std::span<const count_t> y) {
  validate(params);
  detail::check_dims(params.theta.size(), y.size());
  return log_multinomial_coefficient(y) +
         detail::dm_kernel(params.theta, params.theta0(), y, total(y));
}

double rcm_logpmf(const RcmParams& params, std::span<const count_t> y) {
  validate(params);
  const std::size_t p = y.size();
  detail::check_dims(params.pi.size(), p);
  if (params.rho == 0.0) return mn_logpmf(MnParams{params.pi}, y);
  const double rho = params.rho;
  const auto& pi = params.pi;

  // Component j differs from the common base sum only in category j:
  //   s_j = log pi_j + sum_{l != j} y_l log((1-rho) pi_l) + y_j log((1-rho) pi_j + rho)
  std::vector<double> shared(p);
  double base = 0.0;
  std::size_t n_inf = 0;
  std::size_t inf_at = 0;
  for (std::size_t l = 0; l < p; ++l) {
    shared[l] = xlogy(static_cast<double>(y[l]), (1.0 - rho) * pi[static_cast<Eigen::Index>(l)]);
    if (shared[l] == kNegInf) {
      ++n_inf;
      inf_at = l;
    } else {
      base += shared[l];
    }
  }
  std::vector<double> comp(p, kNegInf);
  for (std::size_t j = 0; j < p; ++j) {
    const double pij = pi[static_cast<Eigen::Index>(j)];
    if (pij <= 0.0) continue;
    if (n_inf > 1 || (n_inf == 1 && inf_at != j)) continue;
    const double rest = (n_inf == 1) ? base : base - shared[j];
    comp[j] = std::log(pij) + rest + xlogy(static_cast<double>(y[j]), (1.0 - rho) * pij + rho);
  }
  return log_multinomial_coefficient(y) + detail::log_sum_exp(comp);
}

double nm_logpmf(const NmParams& params, std::span<const count_t> y) {
  validate(params);
  detail::check_dims(static_cast<std::size_t>(params.pi.size() - 1), y.size());
  const count_t m = total(y);
  double s = log_rising(params.beta, static_cast<double>(m));
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] > 1) s -= log_gamma(static_cast<double>(y[j]) + 1.0);
    s += xlogy(static_cast<double>(y[j]), params.pi[static_cast<Eigen::Index>(j)]);
  }
  return s + params.beta * std::log(params.failure());
}

double gdm_logpmf(const GdmParams& params, std::span<const count_t> y) {
  validate(params);
  const std::size_t p = y.size();
  detail::check_dims(static_cast<std::size_t>(params.alpha.size() + 1), p);
  // Tail sums z_j = sum_{h >= j} y_h.
  std::vector<double> tail(p + 1, 0.0);
  for (std::size_t j = p; j-- > 0;) tail[j] = tail[j + 1] + static_cast<double>(y[j]);
  double s = log_multinomial_coefficient(y);
  for (std::size_t j = 0; j + 1 < p; ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    const double a = params.alpha[e];
    const double b = params.beta[e];
    s += log_rising(a, static_cast<double>(y[j])) + log_rising(b, tail[j + 1]) -
         log_rising(a + b, tail[j]);
  }
  return s;
}

double ddm_logpmf(const DdmParams& params, std::span<const count_t> y) {
  validate(params);
  detail::check_dims(params.categories(), y.size());
  const count_t m = total(y);
  const std::size_t K = params.components();
  std::vector<double> comp(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::VectorXd theta = params.theta(k);
    comp[k] = std::log(params.w[static_cast<Eigen::Index>(k)]) +
              detail::dm_kernel(theta, theta.sum(), y, m);
  }
  std::sort(comp.begin(), comp.end());
  return log_multinomial_coefficient(y) + detail::log_sum_exp(comp);
}

double logpmf(const FamilyParams& params, std::span<const count_t> y) {
  switch (family_of(params)) {
    case Family::mn: return mn_logpmf(std::get<MnParams>(params), y);
    case Family::dm: return dm_logpmf(std::get<DmParams>(params), y);
    case Family::rcm: return rcm_logpmf(std::get<RcmParams>(params), y);
    case Family::nm: return nm_logpmf(std::get<NmParams>(params), y);
    case Family::gdm: return gdm_logpmf(std::get<GdmParams>(params), y);
    case Family::ddm: return ddm_logpmf(std::get<DdmParams>(params), y);
  }
  return kNegInf;
}

}  // namespace overcount
