#include "dm_batch.hpp"

#include "overcount/models.hpp"
#include "overcount/specfun.hpp"

namespace overcount::detail {

namespace {
// Matches the switch-over point inside log_rising / digamma_diff.
constexpr double kLargeTheta = 1e5;
}  // namespace

DmBatch::DmBatch(const CountMatrix& data) : p_(data.cols()) {
  row_ptr_.reserve(data.rows() + 1);
  row_ptr_.push_back(0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto y = data.row(i);
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] != 0) {
        col_.push_back(static_cast<std::uint32_t>(j));
        val_.push_back(static_cast<double>(y[j]));
      }
    }
    row_ptr_.push_back(col_.size());
    sizes_.push_back(static_cast<double>(total(y)));
    log_coef_.push_back(log_multinomial_coefficient(y));
    total_log_coef_ += log_coef_.back();
  }
}

void DmBatch::fill_cache(const Eigen::VectorXd& theta, double theta0, bool need_psi,
                         ThetaCache& c) const {
  c.lg.resize(p_);
  c.psi.resize(need_psi ? p_ : 0);
  for (std::size_t j = 0; j < p_; ++j) {
    const double t = theta[static_cast<Eigen::Index>(j)];
    c.lg[j] = t < kLargeTheta ? log_gamma(t) : 0.0;
    if (need_psi) c.psi[j] = t < kLargeTheta ? digamma(t) : 0.0;
  }
  c.lg0 = theta0 < kLargeTheta ? log_gamma(theta0) : 0.0;
  c.psi0 = (need_psi && theta0 < kLargeTheta) ? digamma(theta0) : 0.0;
}

double DmBatch::log_rise(double theta, double lg_theta, double y) const {
  if (y == 0.0) return 0.0;
  return theta < kLargeTheta ? log_gamma(theta + y) - lg_theta : log_rising(theta, y);
}

double DmBatch::psi_diff(double theta, double psi_theta, double y) const {
  if (y == 0.0) return 0.0;
  return theta < kLargeTheta ? digamma(theta + y) - psi_theta : digamma_diff(theta, y);
}

void DmBatch::log_pmf(const Eigen::VectorXd& theta, Eigen::Ref<Eigen::VectorXd> out) const {
  const double theta0 = theta.sum();
  ThetaCache c;
  fill_cache(theta, theta0, false, c);
  for (std::size_t i = 0; i < rows(); ++i) {
    double s = log_coef_[i] - log_rise(theta0, c.lg0, sizes_[i]);
    for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
      const std::uint32_t j = col_[e];
      s += log_rise(theta[j], c.lg[j], val_[e]);
    }
    out[static_cast<Eigen::Index>(i)] = s;
  }
}

double DmBatch::weighted(const Eigen::VectorXd& theta, const double* weights,
                         Eigen::VectorXd* grad) const {
  const double theta0 = theta.sum();
  ThetaCache c;
  fill_cache(theta, theta0, grad != nullptr, c);
  double total_ll = 0.0;
  double grad0 = 0.0;
  for (std::size_t i = 0; i < rows(); ++i) {
    const double wi = weights ? weights[i] : 1.0;
    if (wi == 0.0) continue;
    double s = log_coef_[i] - log_rise(theta0, c.lg0, sizes_[i]);
    for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
      const std::uint32_t j = col_[e];
      s += log_rise(theta[j], c.lg[j], val_[e]);
    }
    total_ll += wi * s;
    if (grad) {
      grad0 -= wi * psi_diff(theta0, c.psi0, sizes_[i]);
      for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
        const std::uint32_t j = col_[e];
        (*grad)[j] += wi * psi_diff(theta[j], c.psi[j], val_[e]);
      }
    }
  }
  if (grad) grad->array() += grad0;
  return total_ll;
}

}  // namespace overcount::detail
