#include <cmath>
#include <stdexcept>
#include <vector>

#include "overcount/models.hpp"

namespace overcount {

namespace {

Eigen::MatrixXd multinomial_shape(const Eigen::VectorXd& pi) {
  Eigen::MatrixXd out = -pi * pi.transpose();
  out.diagonal() += pi;
  return out;
}

Moments mn_moments(const Eigen::VectorXd& pi, double m) {
  return {m * pi, m * multinomial_shape(pi)};
}

Moments dm_moments(const DmParams& q, double m) {
  const Eigen::VectorXd pi = q.pi();
  const double inflation = 1.0 + q.rho2() * (m - 1.0);
  return {m * pi, m * inflation * multinomial_shape(pi)};
}

// The clumped construction has the Dirichlet-multinomial mean and variance
// with rho^2 in place of 1 / (1 + theta0).
Moments rcm_moments(const RcmParams& q, double m) {
  const double inflation = 1.0 + q.rho * q.rho * (m - 1.0);
  return {m * q.pi, m * inflation * multinomial_shape(q.pi)};
}

Moments nm_moments(const NmParams& q) {
  const Eigen::Index p = q.pi.size() - 1;
  const Eigen::VectorXd pi = q.pi.head(p);
  const double f = q.failure();
  Moments out;
  out.mean = q.beta * pi / f;
  out.cov = (q.beta / (f * f)) * pi * pi.transpose();
  out.cov.diagonal() += (q.beta / f) * pi;
  return out;
}

// Stick-breaking representation X_j = Z_j prod_{h<j} (1 - Z_h), Z_h ~ Beta(a_h, b_h),
// X_p = prod_{h<p} (1 - Z_h). Mixed moments of X are products of Beta moments.
Moments gdm_moments(const GdmParams& q, double m) {
  const Eigen::Index p = q.alpha.size() + 1;
  std::vector<double> ez(p - 1), e1mz(p - 1), ez2(p - 1), e1mz2(p - 1), ezz(p - 1);
  for (Eigen::Index h = 0; h < p - 1; ++h) {
    const double a = q.alpha[h];
    const double b = q.beta[h];
    const double s = a + b;
    ez[h] = a / s;
    e1mz[h] = b / s;
    ez2[h] = a * (a + 1.0) / (s * (s + 1.0));
    e1mz2[h] = b * (b + 1.0) / (s * (s + 1.0));
    ezz[h] = a * b / (s * (s + 1.0));
  }
  // E[X_j] and E[X_j^2].
  Eigen::VectorXd ex(p), ex2(p);
  double rem = 1.0, rem2 = 1.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (j < p - 1) {
      ex[j] = rem * ez[j];
      ex2[j] = rem2 * ez2[j];
      rem *= e1mz[j];
      rem2 *= e1mz2[j];
    } else {
      ex[j] = rem;
      ex2[j] = rem2;
    }
  }

  Moments out;
  out.mean = m * ex;
  out.cov.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    out.cov(i, i) = m * ex[i] + m * (m - 1.0) * ex2[i] - m * m * ex[i] * ex[i];
    for (Eigen::Index j = i + 1; j < p; ++j) {
      // E[X_i X_j], i < j: Z_i (1 - Z_i) at i, (1 - Z_h)^2 before i,
      // (1 - Z_h) strictly between, Z_j at j (absent for j = p).
      double exx = ezz[i];
      for (Eigen::Index h = 0; h < i; ++h) exx *= e1mz2[h];
      for (Eigen::Index h = i + 1; h < j; ++h) exx *= e1mz[h];
      if (j < p - 1) exx *= ez[j];
      const double c = m * (m - 1.0) * exx - m * m * ex[i] * ex[j];
      out.cov(i, j) = c;
      out.cov(j, i) = c;
    }
  }
  return out;
}

// Within-component Dirichlet-multinomial covariances plus the between-component
// dispersion of the component means.
Moments ddm_moments(const DdmParams& q, double m) {
  const Eigen::Index p = q.beta.size();
  Moments out;
  out.mean = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t k = 0; k < q.components(); ++k) {
    const double wk = q.w[static_cast<Eigen::Index>(k)];
    const Eigen::VectorXd theta = q.theta(k);
    const double theta0 = theta.sum();
    const Eigen::VectorXd pi = theta / theta0;
    const double rho2 = 1.0 / (1.0 + theta0);
    within += wk * m * (1.0 + rho2 * (m - 1.0)) * multinomial_shape(pi);
    second += wk * m * m * pi * pi.transpose();
    out.mean += wk * m * pi;
  }
  out.cov = within + second - out.mean * out.mean.transpose();
  return out;
}

}  // namespace

Moments moments(const FamilyParams& params, count_t m) {
  validate(params);
  if (m < 1 && family_of(params) != Family::nm) {
    throw std::domain_error("moments need a positive size m");
  }
  const double dm = static_cast<double>(m);
  switch (family_of(params)) {
    case Family::mn: return mn_moments(std::get<MnParams>(params).pi, dm);
    case Family::dm: return dm_moments(std::get<DmParams>(params), dm);
    case Family::rcm: return rcm_moments(std::get<RcmParams>(params), dm);
    case Family::nm: return nm_moments(std::get<NmParams>(params));
    case Family::gdm: return gdm_moments(std::get<GdmParams>(params), dm);
    case Family::ddm: return ddm_moments(std::get<DdmParams>(params), dm);
  }
  throw std::logic_error("unreachable");
}

}  // namespace overcount
