#include <cmath>
#include <stdexcept>

#include "fit_internal.hpp"
#include "overcount/errors.hpp"
#include "overcount/models.hpp"

namespace overcount {

InformationCriteria information_criteria(double loglik, std::size_t n_params, std::size_t n) {
  if (n < 1) throw std::invalid_argument("information_criteria: n must be >= 1");
  const double k = static_cast<double>(n_params);
  return {-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * std::log(static_cast<double>(n))};
}

double loglik(const FamilyParams& params, const CountMatrix& data) {
  detail::require_rows(data);
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) s += logpmf(params, data.row(i));
  return s;
}

namespace detail {

void require_rows(const CountMatrix& data) {
  if (data.rows() == 0) throw InputError("data has no rows");
}

void finalize(FitResult& result, std::size_t n_obs) {
  result.n_obs = n_obs;
  result.n_params = parameter_count(result.params);
  const auto ic = information_criteria(result.loglik, result.n_params, n_obs);
  result.aic = ic.aic;
  result.bic = ic.bic;
}

Eigen::VectorXd pooled_proportions(const CountMatrix& data, double floor) {
  const auto p = static_cast<Eigen::Index>(data.cols());
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto y = data.row(i);
    for (Eigen::Index j = 0; j < p; ++j) sums[j] += static_cast<double>(y[static_cast<std::size_t>(j)]);
  }
  const double tot = sums.sum();
  Eigen::VectorXd pi = tot > 0.0 ? Eigen::VectorXd(sums / tot)
                                 : Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
  if (floor > 0.0) {
    pi = pi.cwiseMax(floor);
    pi /= pi.sum();
  }
  return pi;
}

OptimResult best_of_starts(const Objective& objective, const BoxSpec& box,
                           const std::vector<Eigen::VectorXd>& starts, double tol, int max_iter) {
  OptimResult best;
  bool have = false;
  for (const auto& x0 : starts) {
    OptimResult r;
    try {
      r = minimize(objective, x0, box, tol, max_iter);
    } catch (const std::invalid_argument&) {
      continue;  // start outside the domain of the objective
    }
    if (!have || r.f < best.f) {
      best = std::move(r);
      have = true;
    }
  }
  if (!have) throw std::runtime_error("no start gave a finite objective");
  return best;
}

}  // namespace detail

FitResult fit_mn(const CountMatrix& data) {
  detail::require_rows(data);
  FitResult r;
  r.params = MnParams{detail::pooled_proportions(data)};
  r.loglik = loglik(r.params, data);
  r.trace = {r.loglik};
  r.converged = true;
  r.message = "closed form";
  detail::finalize(r, data.rows());
  return r;
}

FitResult fit_family(Family family, const CountMatrix& data, std::size_t k,
                     const FitConfig& config) {
  switch (family) {
    case Family::mn: return fit_mn(data);
    case Family::dm: return fit_dm(data, config);
    case Family::rcm: return fit_rcm(data, config);
    case Family::nm: return fit_nm(data, config);
    case Family::gdm: return fit_gdm(data, config);
    case Family::ddm: return fit_ddm(data, k, config);
  }
  throw std::logic_error("unreachable");
}

}  // namespace overcount
