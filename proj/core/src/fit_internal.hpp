#pragma once

#include <vector>

#include "overcount/fit.hpp"
#include "overcount/optim.hpp"
#include "overcount/random.hpp"

namespace overcount::detail {

/// Fill loglik-derived fields (n_params, aic, bic, n_obs) of a result.
void finalize(FitResult& result, std::size_t n_obs);

/// Pooled category proportions sum_i y_ij / sum_i m_i, floored at `floor`
/// and renormalized.
Eigen::VectorXd pooled_proportions(const CountMatrix& data, double floor = 0.0);

/// Runs the minimizer from every start and returns the lowest objective.
OptimResult best_of_starts(const Objective& objective, const BoxSpec& box,
                           const std::vector<Eigen::VectorXd>& starts, double tol, int max_iter);

void require_rows(const CountMatrix& data);

}  // namespace overcount::detail
