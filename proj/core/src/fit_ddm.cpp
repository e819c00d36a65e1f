#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "detail.hpp"
#include "dm_batch.hpp"
#include "fit_internal.hpp"
#include "overcount/models.hpp"
#include "overcount/specfun.hpp"

namespace overcount {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kWeightFloor = 1e-300;
constexpr double kFreezeWeight = 1e-8;
constexpr int kFreezeAfter = 3;
constexpr double kAlphaEdge = 1.0 - 1e-9;

// Observed-data log-likelihood; fills tau (n x K) with responsibilities.
double e_step_batch(const detail::DmBatch& batch, const DdmParams& params, MatrixXd& tau) {
  const auto n = static_cast<Eigen::Index>(batch.rows());
  const auto K = static_cast<Eigen::Index>(params.components());
  tau.resize(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    batch.log_pmf(params.theta(static_cast<std::size_t>(k)), tau.col(k));
    tau.col(k).array() += std::log(params.w[k]);
  }
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = tau.row(i).maxCoeff();
    if (!std::isfinite(mx)) throw std::domain_error("observation has zero probability");
    double s = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      tau(i, k) = std::exp(tau(i, k) - mx);
      s += tau(i, k);
    }
    tau.row(i) /= s;
    ll += mx + std::log(s);
  }
  return ll;
}

// sum_i sum_k tau_ik log DM(y_i; beta (1 + alpha_k)); gradient w.r.t. beta and
// w.r.t. alpha_k for every k in `active`, packed [beta; alpha_active...].
double expected_loglik(const detail::DmBatch& batch, const MatrixXd& tau, const VectorXd& beta,
                       const MatrixXd& alpha, const std::vector<Eigen::Index>& active,
                       VectorXd* grad) {
  const auto p = static_cast<Eigen::Index>(batch.cols());
  const Eigen::Index K = alpha.rows();
  if (grad) grad->setZero(p * static_cast<Eigen::Index>(1 + active.size()));
  double q = 0.0;
  VectorXd g_theta(p);
  std::size_t slot = 0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const VectorXd scale = (1.0 + alpha.row(k).array()).matrix().transpose();
    const VectorXd theta = beta.cwiseProduct(scale);
    g_theta.setZero();
    q += batch.weighted(theta, tau.col(k).data(), grad ? &g_theta : nullptr);
    if (!grad) continue;
    grad->head(p) += scale.cwiseProduct(g_theta);
    if (slot < active.size() && active[slot] == k) {
      grad->segment(p * static_cast<Eigen::Index>(1 + slot), p) = beta.cwiseProduct(g_theta);
      ++slot;
    }
  }
  return q;
}

struct EmRun {
  DdmParams params;
  double loglik = -std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  bool converged = false;
  int iterations = 0;
  std::string message;
};

EmRun run_em(const detail::DmBatch& batch, DdmParams params, const FitConfig& config) {
  const auto n = static_cast<double>(batch.rows());
  const auto p = static_cast<Eigen::Index>(batch.cols());
  const auto K = static_cast<Eigen::Index>(params.components());

  EmRun run;
  MatrixXd tau;
  double ll = e_step_batch(batch, params, tau);
  run.trace.push_back(ll);

  std::vector<int> low_weight(static_cast<std::size_t>(K), 0);
  std::vector<bool> frozen(static_cast<std::size_t>(K), false);
  std::vector<Eigen::Index> active;
  std::optional<Minimizer> minimizer;

  for (int it = 1; it <= config.max_em_iter; ++it) {
    params.w = (tau.colwise().sum().transpose() / n).cwiseMax(kWeightFloor);
    params.w /= params.w.sum();

    bool changed = !minimizer.has_value();
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      if (frozen[uk]) continue;
      low_weight[uk] = params.w[k] < kFreezeWeight ? low_weight[uk] + 1 : 0;
      if (low_weight[uk] >= kFreezeAfter) {
        frozen[uk] = true;
        changed = true;
      }
    }
    if (changed) {
      active.clear();
      for (Eigen::Index k = 0; k < K; ++k) {
        if (!frozen[static_cast<std::size_t>(k)]) active.push_back(k);
      }
      BoxSpec box;
      box.add_positive(static_cast<std::size_t>(p));
      box.add_interval(-1.0, 1.0, static_cast<std::size_t>(p) * active.size());
      minimizer.emplace(std::move(box));
    }

    const auto dim = p * static_cast<Eigen::Index>(1 + active.size());
    VectorXd x0(dim);
    x0.head(p) = params.beta;
    for (std::size_t s = 0; s < active.size(); ++s) {
      x0.segment(p * static_cast<Eigen::Index>(1 + s), p) = params.alpha.row(active[s]).transpose();
    }
    const MatrixXd frozen_alpha = params.alpha;
    const Objective obj = [&](const VectorXd& x, VectorXd& grad) {
      MatrixXd alpha = frozen_alpha;
      for (std::size_t s = 0; s < active.size(); ++s) {
        alpha.row(active[s]) = x.segment(p * static_cast<Eigen::Index>(1 + s), p).transpose();
      }
      const double q = expected_loglik(batch, tau, x.head(p), alpha, active, &grad);
      grad /= -n;
      return -q / n;
    };
    const OptimResult opt = minimizer->minimize(obj, x0, config.optim_tol, config.mstep_max_iter);
    params.beta = opt.x.head(p);
    for (std::size_t s = 0; s < active.size(); ++s) {
      params.alpha.row(active[s]) = opt.x.segment(p * static_cast<Eigen::Index>(1 + s), p).transpose();
    }

    const double ll_new = e_step_batch(batch, params, tau);
    run.trace.push_back(ll_new);
    run.iterations = it;
    const double delta = ll_new - ll;
    ll = ll_new;
    if (std::abs(delta) < config.tol_loglik) {
      run.converged = true;
      break;
    }
  }
  run.loglik = ll;
  run.params = std::move(params);
  run.message = run.converged ? "log-likelihood change below tolerance" : "max_em_iter reached";
  return run;
}

DdmParams random_start(const VectorXd& beta, std::size_t K, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  DdmParams start;
  start.beta = beta;
  start.w = VectorXd::Constant(static_cast<Eigen::Index>(K), 1.0 / static_cast<double>(K));
  start.alpha.resize(static_cast<Eigen::Index>(K), beta.size());
  for (Eigen::Index k = 0; k < start.alpha.rows(); ++k) {
    for (Eigen::Index j = 0; j < start.alpha.cols(); ++j) start.alpha(k, j) = u(rng);
  }
  return start;
}

}  // namespace

Responsibilities e_step(const DdmParams& params, const CountMatrix& data) {
  validate(params);
  detail::require_rows(data);
  detail::check_dims(params.categories(), data.cols());
  const detail::DmBatch batch(data);
  Responsibilities r;
  e_step_batch(batch, params, r.tau);
  return r;
}

VectorXd m_step_weights(const Responsibilities& resp) {
  if (resp.tau.rows() == 0) throw std::invalid_argument("m_step_weights: no rows");
  return resp.tau.colwise().sum().transpose() / static_cast<double>(resp.tau.rows());
}

DdmScores ddm_scores(const DdmParams& params, std::span<const count_t> y) {
  validate(params);
  detail::check_dims(params.categories(), y.size());
  const auto K = static_cast<Eigen::Index>(params.components());
  const auto p = static_cast<Eigen::Index>(params.categories());
  const double m = static_cast<double>(total(y));
  DdmScores s{MatrixXd(K, p), MatrixXd(K, p)};
  for (Eigen::Index k = 0; k < K; ++k) {
    const VectorXd theta = params.theta(static_cast<std::size_t>(k));
    const double common = digamma_diff(theta.sum(), m);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double g =
          digamma_diff(theta[j], static_cast<double>(y[static_cast<std::size_t>(j)])) - common;
      s.beta(k, j) = (1.0 + params.alpha(k, j)) * g;
      s.alpha(k, j) = params.beta[j] * g;
    }
  }
  return s;
}

double ddm_expected_loglik(const CountMatrix& data, const Responsibilities& resp,
                           const VectorXd& beta, const MatrixXd& alpha, VectorXd* grad) {
  detail::require_rows(data);
  detail::check_dims(data.cols(), static_cast<std::size_t>(beta.size()));
  detail::check_dims(static_cast<std::size_t>(alpha.cols()), static_cast<std::size_t>(beta.size()));
  if (resp.tau.rows() != static_cast<Eigen::Index>(data.rows()) || resp.tau.cols() != alpha.rows()) {
    throw std::invalid_argument("ddm_expected_loglik: responsibilities shape mismatch");
  }
  const detail::DmBatch batch(data);
  std::vector<Eigen::Index> all(static_cast<std::size_t>(alpha.rows()));
  for (Eigen::Index k = 0; k < alpha.rows(); ++k) all[static_cast<std::size_t>(k)] = k;
  return expected_loglik(batch, resp.tau, beta, alpha, all, grad);
}

FitResult fit_ddm(const CountMatrix& data, std::size_t k, const FitConfig& config,
                  const std::optional<DdmParams>& init) {
  detail::require_rows(data);
  if (k < 1) throw std::invalid_argument("fit_ddm: K must be >= 1");
  if (config.tol_loglik <= 0.0 || config.max_em_iter < 1 || config.n_starts < 1) {
    throw std::invalid_argument("fit_ddm: invalid FitConfig");
  }
  if (init) {
    validate(*init);
    detail::check_dims(data.cols(), init->categories());
    if (init->components() != k) throw std::invalid_argument("fit_ddm: init has wrong K");
  }
  const detail::DmBatch batch(data);
  const VectorXd beta0 = dm_method_of_moments(data).theta;

  EmRun best;
  bool have = false;
  std::string last_error;
  for (int s = 0; s < config.n_starts; ++s) {
    DdmParams start = (s == 0 && init)
                          ? *init
                          : random_start(beta0, k,
                                         derive_seed(config.seed, {static_cast<std::uint64_t>(s)}));
    try {
      EmRun run = run_em(batch, std::move(start), config);
      if (!have || run.loglik > best.loglik) {
        best = std::move(run);
        have = true;
      }
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  if (!have) throw std::runtime_error("fit_ddm: every start failed: " + last_error);

  FitResult r;
  r.params = std::move(best.params);
  r.loglik = best.loglik;
  r.trace = std::move(best.trace);
  r.converged = best.converged;
  r.iterations = best.iterations;
  r.message = std::move(best.message);
  detail::finalize(r, data.rows());
  r.overparameterized = static_cast<double>(k * data.cols()) >
                        config.overparam_ratio * static_cast<double>(data.rows());
  return r;
}

DdmParams split_heaviest_component(const DdmParams& params, double eps) {
  validate(params);
  const auto K = static_cast<Eigen::Index>(params.components());
  Eigen::Index h = 0;
  params.w.maxCoeff(&h);
  DdmParams out;
  out.beta = params.beta;
  out.w.resize(K + 1);
  out.w.head(K) = params.w;
  out.w[h] = params.w[h] / 2.0;
  out.w[K] = params.w[h] / 2.0;
  out.alpha.resize(K + 1, params.alpha.cols());
  out.alpha.topRows(K) = params.alpha;
  out.alpha.row(h) = (params.alpha.row(h).array() + eps).cwiseMin(kAlphaEdge).matrix();
  out.alpha.row(K) = (params.alpha.row(h).array() - eps).cwiseMax(-kAlphaEdge).matrix();
  return out;
}

KSelection select_k(const CountMatrix& data, std::size_t k_min, std::size_t k_max,
                    const FitConfig& config) {
  if (k_min < 1 || k_max < k_min) throw std::invalid_argument("select_k: empty K range");
  KSelection sel;
  std::optional<DdmParams> previous;
  double best_aic = std::numeric_limits<double>::infinity();
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t k = k_min; k <= k_max; ++k) {
    KSelectionRow row;
    row.k = k;
    try {
      std::optional<DdmParams> init;
      if (previous) init = split_heaviest_component(*previous);
      FitResult fit = fit_ddm(data, k, config, init);
      row.ok = true;
      row.loglik = fit.loglik;
      row.aic = fit.aic;
      row.bic = fit.bic;
      previous = std::get<DdmParams>(fit.params);
      if (fit.aic < best_aic) {
        best_aic = fit.aic;
        sel.best_aic_k = k;
      }
      if (fit.bic < best_bic) {
        best_bic = fit.bic;
        sel.best_bic_k = k;
      }
      sel.fits.push_back(std::move(fit));
    } catch (const std::exception& e) {
      row.error = e.what();
      previous.reset();
    }
    sel.rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i + 1 < sel.rows.size(); ++i) {
    const auto& a = sel.rows[i];
    const auto& b = sel.rows[i + 1];
    sel.bic_increasing.push_back(a.ok && b.ok && b.bic > a.bic);
  }
  return sel;
}

}  // namespace overcount
