#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "overcount/models.hpp"
#include "overcount/random.hpp"

namespace overcount {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632BE59BD9B4E019ULL));
  return h;
}

Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

double draw_log_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw std::domain_error("gamma shape must be positive");
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    double x = g(rng);
    while (x <= 0.0) x = g(rng);
    return std::log(x);
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a), kept in log space.
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = g(rng);
  while (x <= 0.0) x = g(rng);
  double v = u(rng);
  while (v <= 0.0) v = u(rng);
  return std::log(x) + std::log(v) / shape;
}

Eigen::VectorXd draw_dirichlet(const Eigen::VectorXd& concentration, Rng& rng) {
  const Eigen::Index p = concentration.size();
  Eigen::VectorXd lg(p);
  for (Eigen::Index j = 0; j < p; ++j) lg[j] = draw_log_gamma(concentration[j], rng);
  const double mx = lg.maxCoeff();
  Eigen::VectorXd out = (lg.array() - mx).exp().matrix();
  return out / out.sum();
}

double draw_beta(double a, double b, Rng& rng) {
  const double la = draw_log_gamma(a, rng);
  const double lb = draw_log_gamma(b, rng);
  // a / (a + b) = 1 / (1 + exp(lb - la))
  return 1.0 / (1.0 + std::exp(lb - la));
}

void draw_multinomial(count_t m, const Eigen::VectorXd& probs, Rng& rng,
                      std::span<count_t> out) {
  const std::size_t p = out.size();
  double mass = probs.sum();
  count_t left = m;
  for (std::size_t j = 0; j < p; ++j) {
    if (j + 1 == p) {
      out[j] = left;
      break;
    }
    const double pj = probs[static_cast<Eigen::Index>(j)];
    if (left == 0 || pj <= 0.0) {
      out[j] = 0;
    } else if (pj >= mass) {
      out[j] = left;
    } else {
      std::binomial_distribution<count_t> bin(left, std::clamp(pj / mass, 0.0, 1.0));
      out[j] = bin(rng);
    }
    left -= out[j];
    mass -= pj;
  }
}

std::size_t draw_categorical(const Eigen::VectorXd& weights, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, weights.sum());
  double r = u(rng);
  for (Eigen::Index k = 0; k + 1 < weights.size(); ++k) {
    r -= weights[k];
    if (r < 0.0) return static_cast<std::size_t>(k);
  }
  return static_cast<std::size_t>(weights.size() - 1);
}

namespace {

// Y = X N + Z with X ~ Multinomial(pi, 1), N ~ Binomial(m, rho),
// Z | N ~ Multinomial(pi, m - N).
void draw_rcm(const RcmParams& q, count_t m, Rng& rng, std::span<count_t> out) {
  const std::size_t x = draw_categorical(q.pi, rng);
  std::binomial_distribution<count_t> clump(m, q.rho);
  const count_t n_clumped = clump(rng);
  draw_multinomial(m - n_clumped, q.pi, rng, out);
  out[x] += n_clumped;
}

// Gamma-Poisson: lambda ~ Gamma(beta, 1), Y_j ~ Poisson(lambda pi_j / pi_fail).
void draw_nm(const NmParams& q, Rng& rng, std::span<count_t> out) {
  std::gamma_distribution<double> g(q.beta, 1.0);
  const double lambda = g(rng);
  const double f = q.failure();
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double mu = lambda * q.pi[static_cast<Eigen::Index>(j)] / f;
    if (mu <= 0.0) {
      out[j] = 0;
    } else {
      std::poisson_distribution<count_t> pois(mu);
      out[j] = pois(rng);
    }
  }
}

Eigen::VectorXd draw_gdm_probs(const GdmParams& q, Rng& rng) {
  const Eigen::Index p = q.alpha.size() + 1;
  Eigen::VectorXd probs(p);
  double rem = 1.0;
  for (Eigen::Index j = 0; j < p - 1; ++j) {
    const double z = draw_beta(q.alpha[j], q.beta[j], rng);
    probs[j] = rem * z;
    rem *= 1.0 - z;
  }
  probs[p - 1] = rem;
  return probs;
}

}  // namespace

CountMatrix sample(const FamilyParams& params, count_t m, std::size_t n, std::uint64_t seed) {
  validate(params);
  if (m < 0) throw std::domain_error("size m must be nonnegative");
  const std::size_t p = categories(params);
  CountMatrix out(n, p);
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    switch (family_of(params)) {
      case Family::mn:
        draw_multinomial(m, std::get<MnParams>(params).pi, rng, row);
        break;
      case Family::dm:
        draw_multinomial(m, draw_dirichlet(std::get<DmParams>(params).theta, rng), rng, row);
        break;
      case Family::rcm:
        draw_rcm(std::get<RcmParams>(params), m, rng, row);
        break;
      case Family::nm:
        draw_nm(std::get<NmParams>(params), rng, row);
        break;
      case Family::gdm:
        draw_multinomial(m, draw_gdm_probs(std::get<GdmParams>(params), rng), rng, row);
        break;
      case Family::ddm: {
        const auto& q = std::get<DdmParams>(params);
        const std::size_t k = draw_categorical(q.w, rng);
        draw_multinomial(m, draw_dirichlet(q.theta(k), rng), rng, row);
        break;
      }
    }
  }
  return out;
}

}  // namespace overcount
