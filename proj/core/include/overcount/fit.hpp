#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "overcount/counts.hpp"
#include "overcount/params.hpp"

namespace overcount {

struct FitConfig {
  /// EM stops when the observed-data log-likelihood changes by less than this.
  double tol_loglik = 1e-6;
  int max_em_iter = 500;
  int n_starts = 5;
  std::uint64_t seed = 1;
  /// Gradient-norm tolerance of the quasi-Newton solver, in transformed
  /// coordinates of the per-observation mean negative log-likelihood.
  double optim_tol = 1e-6;
  int mstep_max_iter = 500;
  int direct_max_iter = 2000;
  /// fit_ddm flags the result when K * p exceeds this multiple of n.
  double overparam_ratio = 1.0;
};

struct FitResult {
  FamilyParams params;
  double loglik = 0.0;
  /// Observed-data log-likelihood per EM iteration (a single entry for
  /// direct fits).
  std::vector<double> trace;
  bool converged = false;
  std::size_t n_params = 0;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n_obs = 0;
  int iterations = 0;
  bool overparameterized = false;
  std::string message;
};

/// Posterior component probabilities, n x K.
struct Responsibilities {
  Eigen::MatrixXd tau;
};

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

/// aic = -2 loglik + 2 k, bic = -2 loglik + k ln n.
InformationCriteria information_criteria(double loglik, std::size_t n_params, std::size_t n);

/// Sum of row log-pmfs, each row at its own total.
double loglik(const FamilyParams& params, const CountMatrix& data);

/// Closed-form multinomial MLE: pooled category proportions.
FitResult fit_mn(const CountMatrix& data);

/// Method-of-moments Dirichlet-multinomial: pooled proportions scaled by the
/// theta0 that matches the average excess dispersion across rows.
DmParams dm_method_of_moments(const CountMatrix& data);

// Direct quasi-Newton maximum likelihood.
FitResult fit_dm(const CountMatrix& data, const FitConfig& config = {});
FitResult fit_rcm(const CountMatrix& data, const FitConfig& config = {});
FitResult fit_nm(const CountMatrix& data, const FitConfig& config = {});
FitResult fit_gdm(const CountMatrix& data, const FitConfig& config = {});

Responsibilities e_step(const DdmParams& params, const CountMatrix& data);

/// Column means of tau.
Eigen::VectorXd m_step_weights(const Responsibilities& resp);

/// Gradients of log DM(y; beta (1 + alpha_k)) with respect to beta and to
/// alpha_k, one row per component (both K x p).
struct DdmScores {
  Eigen::MatrixXd beta;
  Eigen::MatrixXd alpha;
};
DdmScores ddm_scores(const DdmParams& params, std::span<const count_t> y);

/// Expected complete-data log-likelihood sum_i sum_k tau_ik log DM(y_i; beta (1 + alpha_k))
/// (the part of the EM objective that depends on beta and alpha). When grad
/// is non-null it receives the gradient packed as [beta; alpha_1; ...; alpha_K].
double ddm_expected_loglik(const CountMatrix& data, const Responsibilities& resp,
                           const Eigen::VectorXd& beta, const Eigen::MatrixXd& alpha,
                           Eigen::VectorXd* grad = nullptr);

/// Generalized EM for the deep Dirichlet-multinomial with K components. The
/// best of config.n_starts starts is returned; `init`, when given, is used
/// as the first start.
FitResult fit_ddm(const CountMatrix& data, std::size_t k, const FitConfig& config = {},
                  const std::optional<DdmParams>& init = std::nullopt);

/// Dispatch on family; k is used only for DDM.
FitResult fit_family(Family family, const CountMatrix& data, std::size_t k = 1,
                     const FitConfig& config = {});

/// Copy of a K-component fit with one extra component: the heaviest component
/// is split into two nearly identical halves (alpha shifted by +-eps).
DdmParams split_heaviest_component(const DdmParams& params, double eps = 1e-3);

struct KSelectionRow {
  std::size_t k = 0;
  bool ok = false;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::string error;
};

struct KSelection {
  std::vector<KSelectionRow> rows;
  std::size_t best_aic_k = 0;
  std::size_t best_bic_k = 0;
  /// bic_increasing[i] is true when BIC rises from rows[i] to rows[i + 1].
  std::vector<bool> bic_increasing;
  std::vector<FitResult> fits;
};

/// Fits DDM for every K in [k_min, k_max], warm-starting each K from the
/// previous fit, and reports the AIC-minimizing K.
KSelection select_k(const CountMatrix& data, std::size_t k_min, std::size_t k_max,
                    const FitConfig& config = {});

}  // namespace overcount
