#pragma once

// Dirichlet-multinomial log-pmf and theta-gradient over all rows of a count
// matrix, stored sparsely (zero cells contribute nothing).

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "overcount/counts.hpp"

namespace overcount::detail {

class DmBatch {
 public:
  explicit DmBatch(const CountMatrix& data);

  std::size_t rows() const { return sizes_.size(); }
  std::size_t cols() const { return p_; }

  /// out[i] = log DM(y_i; theta), including the multinomial coefficient.
  void log_pmf(const Eigen::VectorXd& theta, Eigen::Ref<Eigen::VectorXd> out) const;

  /// sum_i weight_i log DM(y_i; theta) (weights null means all ones). When
  /// grad is non-null, adds the theta-gradient of that sum into it.
  double weighted(const Eigen::VectorXd& theta, const double* weights,
                  Eigen::VectorXd* grad) const;

  double total_log_coef() const { return total_log_coef_; }

 private:
  struct ThetaCache {
    std::vector<double> lg;
    std::vector<double> psi;
    double lg0 = 0.0;
    double psi0 = 0.0;
  };
  void fill_cache(const Eigen::VectorXd& theta, double theta0, bool need_psi, ThetaCache& c) const;
  double log_rise(double theta, double lg_theta, double y) const;
  double psi_diff(double theta, double psi_theta, double y) const;

  std::size_t p_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
  std::vector<double> sizes_;
  std::vector<double> log_coef_;
  double total_log_coef_ = 0.0;
};

}  // namespace overcount::detail
