#include "overcount/specfun.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace overcount {
namespace {

constexpr double kEulerGamma = 0.5772156649015328606065121;
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

// zeta(k) - 1 for k = 2, 3, ...
constexpr std::array<double, 30> kZetaMinusOne = {
    0.64493406684822643647,   0.2020569031595942854,    0.082323233711138191516,
    0.036927755143369926331,  0.017343061984449139715,  0.0083492773819228268398,
    0.0040773561979443393787, 0.0020083928260822144179, 0.00099457512781808533715,
    0.0004941886041194645587, 0.00024608655330804829864, 0.00012271334757848914675,
    6.1248135058704829259e-5, 3.0588236307020493552e-5, 1.5282259408651871733e-5,
    7.6371976378997622736e-6, 3.8172932649998398565e-6, 1.9082127165539389257e-6,
    9.5396203387279611315e-7, 4.7693298678780646312e-7, 2.3845050272773299e-7,
    1.1921992596531107307e-7, 5.9608189051259479612e-8, 2.9803503514652280186e-8,
    1.4901554828365041235e-8, 7.450711789835429492e-9,  3.7253340247884570548e-9,
    1.8626597235130490064e-9, 9.3132743241966818287e-10, 4.656629065033784073e-10,
};

// B_{2k} / (2k (2k-1)) for the Stirling series of log Gamma.
constexpr std::array<double, 8> kStirling = {
    1.0 / 12.0,     -1.0 / 360.0,      1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0,  -3617.0 / 122400.0,
};

// B_{2k} / (2k) for the asymptotic series of digamma.
constexpr std::array<double, 7> kDigammaAsym = {
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
};

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) {
    throw std::domain_error(std::string(what) + ": argument must be positive, got " +
                            std::to_string(x));
  }
}

// sum_{k>=2} (-1)^k (zeta(k) - 1) z^k / k for |z| <= 0.5.
double zeta_tail_series(double z) {
  double sum = 0.0;
  double zk = z;
  for (std::size_t i = 0; i < kZetaMinusOne.size(); ++i) {
    zk *= z;
    const int k = static_cast<int>(i) + 2;
    const double term = kZetaMinusOne[i] * zk / k;
    sum += (k % 2 == 0) ? term : -term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

double stirling(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double pw = inv;
  for (double c : kStirling) {
    series += c * pw;
    pw *= inv2;
  }
  return (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series;
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x < 0.5) {
    // log Gamma(x) = log Gamma(1 + x) - log x, with 1 + x in [1, 1.5).
    return -std::log1p(x) + x * (1.0 - kEulerGamma) + zeta_tail_series(x) - std::log(x);
  }
  if (x < 1.5) {
    const double z = x - 1.0;
    return -std::log1p(z) + z * (1.0 - kEulerGamma) + zeta_tail_series(z);
  }
  if (x < 2.5) {
    const double z = x - 2.0;
    return z * (1.0 - kEulerGamma) + zeta_tail_series(z);
  }
  if (x >= 10.0) return stirling(x);
  double prod = 1.0;
  while (x < 10.0) {
    prod *= x;
    x += 1.0;
  }
  return stirling(x) - std::log(prod);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  double series = 0.0;
  double pw = inv2;
  for (double c : kDigammaAsym) {
    series += c * pw;
    pw *= inv2;
  }
  return result + std::log(x) - 0.5 / x - series;
}

namespace {
constexpr double kLargeTheta = 1e5;
}

double log_rising(double theta, double y) {
  require_positive(theta, "log_rising");
  if (y == 0.0) return 0.0;
  if (theta < kLargeTheta) return log_gamma(theta + y) - log_gamma(theta);
  // Stirling difference; both arguments exceed 1e5 so two correction terms suffice.
  const double z = theta + y;
  return y * std::log(theta) + (z - 0.5) * std::log1p(y / theta) - y -
         y / (12.0 * theta * z) - (1.0 / (z * z * z) - 1.0 / (theta * theta * theta)) / 360.0;
}

double digamma_diff(double theta, double y) {
  require_positive(theta, "digamma_diff");
  if (y == 0.0) return 0.0;
  if (theta < kLargeTheta) return digamma(theta + y) - digamma(theta);
  const double z = theta + y;
  return std::log1p(y / theta) + y / (2.0 * theta * z) +
         (1.0 / (theta * theta) - 1.0 / (z * z)) / 12.0;
}

}  // namespace overcount
