#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "overcount/fit.hpp"
#include "overcount/models.hpp"
#include "overcount/optim.hpp"
#include "overcount/specfun.hpp"
#include "support.hpp"

namespace {

using namespace overcount;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

CountMatrix mixed_data(std::size_t n, std::uint64_t seed) {
  DdmParams truth{vec({0.5, 0.5}), vec({2.0, 2.0, 2.0, 2.0}), MatrixXd(2, 4)};
  truth.alpha << 0.8, 0.8, -0.8, -0.8, -0.8, -0.8, 0.8, 0.8;
  return sample(truth, 40, n, seed);
}

TEST(EStep, IdenticalComponentsGiveUniformTau) {
  DdmParams q{VectorXd::Constant(3, 1.0 / 3.0), vec({1.0, 2.0, 3.0}), MatrixXd::Constant(3, 3, 0.2)};
  const auto d = CountMatrix::from_rows({{1, 2, 3}, {0, 0, 9}});
  const auto tau = e_step(q, d).tau;
  EXPECT_LE((tau.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-12);
}

TEST(EStep, DegenerateWeights) {
  DdmParams q{vec({1.0 - 1e-12, 1e-12}), vec({1.0, 1.0}), MatrixXd(2, 2)};
  q.alpha << 0.5, -0.5, -0.5, 0.5;
  const auto tau = e_step(q, CountMatrix::from_rows({{5, 0}, {0, 5}, {2, 3}})).tau;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(tau(i, 0), 1.0, 1e-9);
}

TEST(EStep, RatioMatchesPmfs) {
  DdmParams q{vec({0.3, 0.7}), vec({1.5, 2.5}), MatrixXd(2, 2)};
  q.alpha << 0.4, -0.2, -0.6, 0.1;
  const auto d = CountMatrix::from_rows({{3, 1}, {0, 4}, {2, 2}, {7, 0}});
  const auto tau = e_step(q, d).tau;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const double l1 = std::log(0.3) + dm_logpmf({q.theta(0)}, d.row(i));
    const double l2 = std::log(0.7) + dm_logpmf({q.theta(1)}, d.row(i));
    const auto ii = static_cast<Eigen::Index>(i);
    EXPECT_NEAR(std::log(tau(ii, 0) / tau(ii, 1)), l1 - l2, 1e-12);
    EXPECT_NEAR(tau.row(ii).sum(), 1.0, 1e-12);
  }
}

TEST(MStepWeights, Examples) {
  Responsibilities r;
  r.tau = MatrixXd(2, 2);
  r.tau << 0.2, 0.8, 0.6, 0.4;
  const VectorXd w = m_step_weights(r);
  EXPECT_DOUBLE_EQ(w[0], 0.4);
  EXPECT_DOUBLE_EQ(w[1], 0.6);
  r.tau = MatrixXd::Zero(5, 3);
  r.tau.col(0).setOnes();
  EXPECT_EQ(m_step_weights(r), vec({1.0, 0.0, 0.0}));
  r.tau = MatrixXd::Constant(4, 4, 0.25);
  EXPECT_EQ(m_step_weights(r), VectorXd::Constant(4, 0.25));
}

TEST(DdmScores, MatchFiniteDifferences) {
  std::mt19937_64 rng(17);
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t p = 2 + rep % 4;
    const std::size_t k = 1 + rep % 3;
    const DdmParams q = testkit::random_ddm(p, k, rng);
    std::vector<count_t> y(p);
    std::uniform_int_distribution<count_t> u(0, 12);
    for (auto& v : y) v = u(rng);
    const auto s = ddm_scores(q, y);
    for (std::size_t c = 0; c < k; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      const auto log_dm = [&](const VectorXd& beta, const MatrixXd& alpha) {
        DdmParams t = q;
        t.beta = beta;
        t.alpha = alpha;
        return dm_logpmf({t.theta(c)}, y);
      };
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
        VectorXd bp = q.beta, bm = q.beta;
        bp[j] += h;
        bm[j] -= h;
        const double fb = (log_dm(bp, q.alpha) - log_dm(bm, q.alpha)) / (2 * h);
        EXPECT_LE(std::abs(s.beta(ci, j) - fb) / (1 + std::abs(s.beta(ci, j))), 1e-5);
        MatrixXd ap = q.alpha, am = q.alpha;
        ap(ci, j) += h;
        am(ci, j) -= h;
        const double fa = (log_dm(q.beta, ap) - log_dm(q.beta, am)) / (2 * h);
        EXPECT_LE(std::abs(s.alpha(ci, j) - fa) / (1 + std::abs(s.alpha(ci, j))), 1e-5);
      }
    }
  }
}

TEST(DdmScores, ChainRuleIdentities) {
  std::mt19937_64 rng(23);
  const DdmParams q = testkit::random_ddm(5, 3, rng);
  const std::vector<count_t> y{3, 0, 7, 1, 4};
  const auto s = ddm_scores(q, y);
  for (Eigen::Index c = 0; c < 3; ++c) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double g = s.beta(c, j) / (1.0 + q.alpha(c, j));
      EXPECT_NEAR(s.alpha(c, j), q.beta[j] * g, 1e-12 * (1 + std::abs(s.alpha(c, j))));
    }
  }

  DdmParams flat{VectorXd::Ones(1), q.beta, MatrixXd::Zero(1, 5)};
  const auto s0 = ddm_scores(flat, y);
  const double m = 15.0;
  for (Eigen::Index j = 0; j < 5; ++j) {
    const double classical = digamma(q.beta[j] + static_cast<double>(y[static_cast<std::size_t>(j)])) -
                             digamma(q.beta[j]) - digamma(q.beta.sum() + m) +
                             digamma(q.beta.sum());
    EXPECT_NEAR(s0.beta(0, j), classical, 1e-10);
  }
}

TEST(ExpectedLoglik, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(29);
  const auto d = mixed_data(30, 3);
  for (int rep = 0; rep < 5; ++rep) {
    const DdmParams q = testkit::random_ddm(4, 2, rng);
    const auto resp = e_step(q, d);
    const Objective f = [&](const VectorXd& x, VectorXd& g) {
      const VectorXd beta = x.head(4);
      MatrixXd alpha(2, 4);
      alpha.row(0) = x.segment(4, 4).transpose();
      alpha.row(1) = x.segment(8, 4).transpose();
      return ddm_expected_loglik(d, resp, beta, alpha, &g);
    };
    VectorXd x(12);
    x << q.beta, q.alpha.row(0).transpose(), q.alpha.row(1).transpose();
    EXPECT_LE(check_gradient(f, x), 1e-5);
  }
}

TEST(ExpectedLoglik, RejectsShapeMismatch) {
  const auto d = mixed_data(10, 4);
  Responsibilities r;
  r.tau = MatrixXd::Constant(10, 2, 0.5);
  EXPECT_THROW(ddm_expected_loglik(d, r, VectorXd::Ones(3), MatrixXd::Zero(2, 3)),
               std::domain_error);
  EXPECT_THROW(ddm_expected_loglik(d, r, VectorXd::Ones(4), MatrixXd::Zero(3, 4)),
               std::invalid_argument);
  EXPECT_NO_THROW(ddm_expected_loglik(d, r, VectorXd::Ones(4), MatrixXd::Zero(2, 4)));
}

TEST(FitDdm, TraceIsMonotone) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto d = mixed_data(50, seed);
    FitConfig cfg;
    cfg.seed = seed;
    cfg.n_starts = 2;
    const auto fit = fit_ddm(d, 2 + seed % 2, cfg);
    for (std::size_t t = 1; t < fit.trace.size(); ++t) {
      EXPECT_GE(fit.trace[t], fit.trace[t - 1] - 1e-8) << "seed " << seed << " iter " << t;
    }
    EXPECT_DOUBLE_EQ(fit.loglik, fit.trace.back());
    EXPECT_NEAR(fit.loglik, loglik(fit.params, d), 1e-8 * std::abs(fit.loglik));
  }
}

TEST(FitDdm, SingleComponentMatchesDm) {
  for (std::uint64_t seed : {5u, 6u}) {
    const auto d = sample(DmParams{vec({1.0, 2.0, 0.5, 3.0})}, 30, 120, seed);
    const auto dm = fit_dm(d);
    const auto ddm = fit_ddm(d, 1);
    EXPECT_NEAR(ddm.loglik, dm.loglik, 1e-4);
  }
}

TEST(FitDdm, RecoversSeparatedWeights) {
  DdmParams truth{vec({0.3, 0.7}), VectorXd::Constant(6, 3.0), MatrixXd(2, 6)};
  truth.alpha << 0.9, 0.9, 0.9, -0.9, -0.9, -0.9, -0.9, -0.9, -0.9, 0.9, 0.9, 0.9;
  FitConfig cfg;
  cfg.n_starts = 3;
  int hits = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const auto d = sample(truth, 60, 500, 500 + rep);
    cfg.seed = rep + 1;
    const VectorXd w = std::get<DdmParams>(fit_ddm(d, 2, cfg).params).w;
    const double lo = std::min(w[0], w[1]);
    if (std::abs(lo - 0.3) <= 0.1) ++hits;
  }
  EXPECT_GE(hits, 16);
}

TEST(FitDdm, LabelPermutationInvariance) {
  std::mt19937_64 rng(31);
  const auto d = mixed_data(40, 7);
  const DdmParams q = testkit::random_ddm(4, 3, rng);
  DdmParams perm = q;
  const int order[] = {2, 0, 1};
  for (int c = 0; c < 3; ++c) {
    perm.w[c] = q.w[order[c]];
    perm.alpha.row(c) = q.alpha.row(order[c]);
  }
  EXPECT_EQ(loglik(perm, d), loglik(q, d));
}

TEST(FitDdm, PermutedFitGivesIdenticalCriteria) {
  const auto d = mixed_data(40, 8);
  FitConfig cfg;
  cfg.n_starts = 1;
  const auto fit = fit_ddm(d, 2, cfg);
  DdmParams q = std::get<DdmParams>(fit.params);
  DdmParams swapped = q;
  swapped.w = q.w.reverse();
  swapped.alpha = q.alpha.colwise().reverse();
  const double a = loglik(q, d);
  const double b = loglik(swapped, d);
  const auto ia = information_criteria(a, fit.n_params, d.rows());
  const auto ib = information_criteria(b, fit.n_params, d.rows());
  EXPECT_EQ(ia.aic, ib.aic);
  EXPECT_EQ(ia.bic, ib.bic);
}

TEST(FitDdm, OverparameterizationFlag) {
  const auto d = mixed_data(10, 9);
  FitConfig cfg;
  cfg.n_starts = 1;
  cfg.max_em_iter = 5;
  EXPECT_TRUE(fit_ddm(d, 3, cfg).overparameterized);
  EXPECT_FALSE(fit_ddm(d, 2, cfg).overparameterized);
}

TEST(FitDdm, ParameterCount) {
  EXPECT_EQ(parameter_count(Family::ddm, 20, 3), 83u);
  EXPECT_EQ(parameter_count(Family::ddm, 20, 1), 41u);
}

TEST(FitDdm, RejectsBadConfig) {
  const auto d = mixed_data(10, 10);
  FitConfig cfg;
  EXPECT_THROW(fit_ddm(d, 0, cfg), std::invalid_argument);
  cfg.tol_loglik = 0.0;
  EXPECT_THROW(fit_ddm(d, 2, cfg), std::invalid_argument);
}

TEST(FitDdm, DeterministicGivenSeed) {
  const auto d = mixed_data(40, 11);
  FitConfig cfg;
  cfg.n_starts = 2;
  cfg.seed = 99;
  const auto a = fit_ddm(d, 2, cfg);
  const auto b = fit_ddm(d, 2, cfg);
  EXPECT_EQ(a.loglik, b.loglik);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(SplitHeaviest, PreservesLikelihood) {
  DdmParams q{vec({0.2, 0.8}), vec({1.0, 2.0, 3.0}), MatrixXd(2, 3)};
  q.alpha << 0.1, 0.2, 0.3, -0.3, 0.0, 0.5;
  const auto s = split_heaviest_component(q);
  ASSERT_EQ(s.components(), 3u);
  EXPECT_NEAR(s.w.sum(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.w[1], 0.4);
  EXPECT_DOUBLE_EQ(s.w[2], 0.4);
  const auto d3 = CountMatrix::from_rows({{1, 2, 3}, {4, 0, 0}, {2, 2, 9}});
  EXPECT_NEAR(loglik(s, d3), loglik(q, d3), 1e-3);
  const auto s0 = split_heaviest_component(q, 0.0);
  EXPECT_NEAR(loglik(s0, d3), loglik(q, d3), 1e-12);
}

TEST(SelectK, SingleValue) {
  const auto d = mixed_data(30, 13);
  const auto sel = select_k(d, 1, 1);
  ASSERT_EQ(sel.rows.size(), 1u);
  EXPECT_EQ(sel.best_aic_k, 1u);
  EXPECT_TRUE(sel.bic_increasing.empty());
}

TEST(SelectK, LoglikNondecreasingUnderWarmStarts) {
  const auto d = mixed_data(60, 14);
  FitConfig cfg;
  cfg.n_starts = 2;
  const auto sel = select_k(d, 1, 4, cfg);
  ASSERT_EQ(sel.rows.size(), 4u);
  for (std::size_t i = 1; i < sel.rows.size(); ++i) {
    ASSERT_TRUE(sel.rows[i].ok);
    EXPECT_GE(sel.rows[i].loglik, sel.rows[i - 1].loglik - 1e-3) << "K=" << sel.rows[i].k;
  }
  EXPECT_EQ(sel.bic_increasing.size(), 3u);
  const auto best = std::min_element(sel.rows.begin(), sel.rows.end(),
                                     [](const auto& a, const auto& b) { return a.aic < b.aic; });
  EXPECT_EQ(sel.best_aic_k, best->k);
}

}  // namespace
