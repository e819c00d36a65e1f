#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "detail.hpp"
#include "dm_batch.hpp"
#include "fit_internal.hpp"
#include "overcount/models.hpp"
#include "overcount/specfun.hpp"

namespace overcount {

namespace {

using Eigen::VectorXd;

// Concentration used to represent the multinomial limit of the DM family.
constexpr double kBoundaryTheta0 = 1e12;

VectorXd softmax(const VectorXd& u) {
  const double mx = u.maxCoeff();
  VectorXd e = (u.array() - mx).exp().matrix();
  return e / e.sum();
}

// Chain rule through pi = softmax(u).
VectorXd softmax_backprop(const VectorXd& pi, const VectorXd& g_pi) {
  return pi.cwiseProduct((g_pi.array() - pi.dot(g_pi)).matrix());
}

double excess_dispersion_rho2(const CountMatrix& data, const VectorXd& pi) {
  double num = 0.0;
  double den = 0.0;
  double sum_m = 0.0;
  double sum_mm1 = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto y = data.row(i);
    const double m = static_cast<double>(total(y));
    sum_m += m;
    sum_mm1 += m * (m - 1.0);
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double pj = pi[static_cast<Eigen::Index>(j)];
      if (pj <= 0.0 || pj >= 1.0) continue;
      const double d = static_cast<double>(y[j]) - m * pj;
      num += d * d;
      den += m * pj * (1.0 - pj);
    }
  }
  if (den <= 0.0 || sum_mm1 <= 0.0) return 0.5;
  const double ratio = num / den;
  return std::clamp((ratio - 1.0) * sum_m / sum_mm1, 1e-8, 1.0 - 1e-8);
}

struct DmSearch {
  VectorXd theta;
  double loglik = 0.0;
  OptimResult opt;
  bool boundary = false;
};

// Best DM fit over the given starts. The multinomial-limit candidate is
// evaluated as well, so the result never falls below the MN fit.
DmSearch search_dm(const detail::DmBatch& batch, const std::vector<VectorXd>& starts,
                   const VectorXd& pooled, const FitConfig& config) {
  const double n = static_cast<double>(batch.rows());
  const Objective obj = [&batch, n](const VectorXd& theta, VectorXd& grad) {
    grad.setZero();
    const double ll = batch.weighted(theta, nullptr, &grad);
    grad /= -n;
    return -ll / n;
  };
  DmSearch out;
  out.opt = detail::best_of_starts(obj, BoxSpec::positive(batch.cols()), starts, config.optim_tol,
                                   config.direct_max_iter);
  out.theta = out.opt.x;
  out.loglik = -out.opt.f * n;

  VectorXd edge = pooled.cwiseMax(1e-15) * kBoundaryTheta0;
  const double edge_ll = batch.weighted(edge, nullptr, nullptr);
  if (edge_ll > out.loglik) {
    out.theta = edge;
    out.loglik = edge_ll;
    out.boundary = true;
  }
  return out;
}

std::vector<VectorXd> jittered_starts(const VectorXd& base, int n_starts, std::uint64_t seed,
                                      double sd) {
  std::vector<VectorXd> starts{base};
  for (int s = 1; s < n_starts; ++s) {
    Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(s)}));
    std::normal_distribution<double> z(0.0, sd);
    VectorXd x = base;
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] *= std::exp(z(rng));
    starts.push_back(std::move(x));
  }
  return starts;
}

FitResult make_result(FamilyParams params, const CountMatrix& data, const OptimResult& opt) {
  FitResult r;
  r.params = std::move(params);
  r.loglik = loglik(r.params, data);
  r.trace = {r.loglik};
  r.converged = opt.converged;
  r.iterations = opt.iterations;
  r.message = opt.message;
  detail::finalize(r, data.rows());
  return r;
}

}  // namespace

DmParams dm_method_of_moments(const CountMatrix& data) {
  detail::require_rows(data);
  const VectorXd pi = detail::pooled_proportions(data);
  const double rho2 = excess_dispersion_rho2(data, pi);
  const double theta0 = 1.0 / rho2 - 1.0;
  const double floor = 1e-6 / static_cast<double>(pi.size());
  VectorXd shape = pi.cwiseMax(floor);
  shape /= shape.sum();
  return DmParams{shape * theta0};
}

FitResult fit_dm(const CountMatrix& data, const FitConfig& config) {
  detail::require_rows(data);
  const detail::DmBatch batch(data);
  const VectorXd mom = dm_method_of_moments(data).theta;
  const auto search = search_dm(batch, jittered_starts(mom, config.n_starts, config.seed, 0.5),
                                detail::pooled_proportions(data), config);
  FitResult r = make_result(DmParams{search.theta}, data, search.opt);
  if (search.boundary) {
    r.converged = true;
    r.message = "multinomial limit";
  }
  return r;
}

FitResult fit_gdm(const CountMatrix& data, const FitConfig& config) {
  detail::require_rows(data);
  const std::size_t p = data.cols();
  const std::size_t n = data.rows();

  // Start from the fitted DM embedded in the GDM family. The GDM likelihood
  // factors into p - 1 beta-binomial terms (y_j against the remaining tail),
  // so each (alpha_j, beta_j) pair is fitted separately.
  const VectorXd theta = std::get<DmParams>(fit_dm(data, config).params).theta;
  GdmParams params{VectorXd(p - 1), VectorXd(p - 1)};
  OptimResult summary;
  summary.converged = true;
  summary.message = "converged";
  for (std::size_t j = 0; j + 1 < p; ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    VectorXd start(2);
    start << theta[e], theta.tail(static_cast<Eigen::Index>(p - j - 1)).sum();

    CountMatrix pair(n, 2);
    count_t pair_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = data.row(i);
      count_t tail = 0;
      for (std::size_t h = j + 1; h < p; ++h) tail += y[h];
      pair(i, 0) = y[j];
      pair(i, 1) = tail;
      pair_total += y[j] + tail;
    }
    if (pair_total == 0) {
      params.alpha[e] = start[0];
      params.beta[e] = start[1];
      continue;
    }
    const detail::DmBatch batch(pair);
    const auto search =
        search_dm(batch, jittered_starts(start, config.n_starts, derive_seed(config.seed, {j}), 0.5),
                  detail::pooled_proportions(pair), config);
    params.alpha[e] = search.theta[0];
    params.beta[e] = search.theta[1];
    summary.iterations += search.opt.iterations;
    if (!search.opt.converged && !search.boundary) {
      summary.converged = false;
      summary.message = search.opt.message;
    }
  }
  return make_result(std::move(params), data, summary);
}

FitResult fit_nm(const CountMatrix& data, const FitConfig& config) {
  detail::require_rows(data);
  const std::size_t p = data.cols();
  const std::size_t n = data.rows();
  const auto P = static_cast<Eigen::Index>(p);

  std::vector<double> sizes(n);
  VectorXd col_sums = VectorXd::Zero(P);
  double lgamma_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = data.row(i);
    sizes[i] = static_cast<double>(total(y));
    for (std::size_t j = 0; j < p; ++j) {
      col_sums[static_cast<Eigen::Index>(j)] += static_cast<double>(y[j]);
      lgamma_y += log_gamma(static_cast<double>(y[j]) + 1.0);
    }
  }
  const double sum_m = col_sums.sum();

  // x = [logits (p + 1); beta]
  const Objective obj = [&](const VectorXd& x, VectorXd& grad) {
    const VectorXd pi = softmax(x.head(P + 1));
    const double beta = x[P + 1];
    const double log_fail = std::log(pi[P]);
    double ll = -lgamma_y + beta * log_fail * static_cast<double>(n);
    double g_beta = log_fail * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      ll += log_rising(beta, sizes[i]);
      g_beta += digamma_diff(beta, sizes[i]);
    }
    for (Eigen::Index j = 0; j < P; ++j) ll += detail::xlogy(col_sums[j], pi[j]);
    // d/du_k of sum_j c_j log pi_j is c_k - pi_k sum_j c_j.
    VectorXd c(P + 1);
    c.head(P) = col_sums;
    c[P] = beta * static_cast<double>(n);
    const double csum = sum_m + c[P];
    grad.head(P + 1) = -(c - pi * csum) / static_cast<double>(n);
    grad[P + 1] = -g_beta / static_cast<double>(n);
    return -ll / static_cast<double>(n);
  };

  // Moment start: the row total is negative binomial with mean
  // beta (1 - pi_f) / pi_f and variance mean / pi_f.
  const double mean_m = sum_m / static_cast<double>(n);
  double var_m = 0.0;
  for (double m : sizes) var_m += (m - mean_m) * (m - mean_m);
  var_m /= std::max<double>(1.0, static_cast<double>(n) - 1.0);
  double fail = var_m > 0.0 ? mean_m / var_m : 0.5;
  fail = std::clamp(fail, 1e-4, 1.0 - 1e-4);
  const double beta0 = std::max(mean_m * fail / (1.0 - fail), 1e-3);
  const VectorXd pooled = detail::pooled_proportions(data, 1e-6);

  BoxSpec box;
  box.add_free(p + 1);
  box.add_positive();
  std::vector<VectorXd> starts;
  for (int s = 0; s < std::max(1, config.n_starts); ++s) {
    Rng rng = make_rng(derive_seed(config.seed, {static_cast<std::uint64_t>(s)}));
    std::normal_distribution<double> z(0.0, s == 0 ? 0.0 : 0.3);
    VectorXd x(P + 2);
    for (Eigen::Index j = 0; j < P; ++j) x[j] = std::log((1.0 - fail) * pooled[j]) + z(rng);
    x[P] = std::log(fail) + z(rng);
    x[P + 1] = beta0 * std::exp(z(rng));
    starts.push_back(std::move(x));
  }
  const auto opt =
      detail::best_of_starts(obj, box, starts, config.optim_tol, config.direct_max_iter);
  return make_result(NmParams{softmax(opt.x.head(P + 1)), opt.x[P + 1]}, data, opt);
}

FitResult fit_rcm(const CountMatrix& data, const FitConfig& config) {
  detail::require_rows(data);
  const std::size_t p = data.cols();
  const std::size_t n = data.rows();
  const auto P = static_cast<Eigen::Index>(p);

  std::vector<double> coef(n);
  for (std::size_t i = 0; i < n; ++i) coef[i] = log_multinomial_coefficient(data.row(i));

  // x = [logits (p); rho]
  const Objective obj = [&](const VectorXd& x, VectorXd& grad) {
    const VectorXd pi = softmax(x.head(P));
    const double rho = x[P];
    const double keep = 1.0 - rho;
    VectorXd log_pi = pi.array().log().matrix();
    VectorXd log_q_off = (pi * keep).array().log().matrix();
    VectorXd q_on = (pi * keep).array() + rho;
    VectorXd log_q_on = q_on.array().log().matrix();

    double ll = 0.0;
    VectorXd g_pi = VectorXd::Zero(P);
    double g_rho = 0.0;
    VectorXd a(P);
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = data.row(i);
      double base = 0.0;
      double m = 0.0;
      for (Eigen::Index j = 0; j < P; ++j) {
        const double yj = static_cast<double>(y[static_cast<std::size_t>(j)]);
        base += detail::xlogy(yj, pi[j] * keep);
        m += yj;
        a[j] = log_pi[j] + (yj == 0.0 ? 0.0 : yj * (log_q_on[j] - log_q_off[j]));
      }
      const double lse = detail::log_sum_exp(std::span<const double>(a.data(), p));
      ll += coef[i] + base + lse;
      for (Eigen::Index j = 0; j < P; ++j) {
        const double r = std::exp(a[j] - lse);
        const double yj = static_cast<double>(y[static_cast<std::size_t>(j)]);
        g_pi[j] += (r + yj * (1.0 - r)) / pi[j] + keep * yj * r / q_on[j];
        g_rho += r * (-(m - yj) / keep + yj * (1.0 - pi[j]) / q_on[j]);
      }
    }
    grad.head(P) = -softmax_backprop(pi, g_pi) / static_cast<double>(n);
    grad[P] = -g_rho / static_cast<double>(n);
    return -ll / static_cast<double>(n);
  };

  const VectorXd pooled = detail::pooled_proportions(data, 1e-6);
  const double rho0 =
      std::clamp(std::sqrt(excess_dispersion_rho2(data, detail::pooled_proportions(data))), 0.01,
                 0.95);
  BoxSpec box;
  box.add_free(p);
  box.add_interval(0.0, 1.0);
  std::vector<VectorXd> starts;
  for (int s = 0; s < std::max(1, config.n_starts); ++s) {
    Rng rng = make_rng(derive_seed(config.seed, {static_cast<std::uint64_t>(s)}));
    std::normal_distribution<double> z(0.0, s == 0 ? 0.0 : 0.3);
    VectorXd x(P + 1);
    for (Eigen::Index j = 0; j < P; ++j) x[j] = std::log(pooled[j]) + z(rng);
    const double logit = std::log(rho0 / (1.0 - rho0)) + 3.0 * z(rng);
    x[P] = std::clamp(1.0 / (1.0 + std::exp(-logit)), 1e-3, 1.0 - 1e-3);
    starts.push_back(std::move(x));
  }
  const auto opt =
      detail::best_of_starts(obj, box, starts, config.optim_tol, config.direct_max_iter);
  return make_result(RcmParams{softmax(opt.x.head(P)), opt.x[P]}, data, opt);
}

}  // namespace overcount
