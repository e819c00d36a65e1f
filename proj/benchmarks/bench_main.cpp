#include <benchmark/benchmark.h>

#include "overcount/fit.hpp"
#include "overcount/models.hpp"
#include "overcount/sim.hpp"
#include "overcount/specfun.hpp"

namespace {

using namespace overcount;

DdmParams bench_ddm(std::size_t p, std::size_t k) {
  DdmParams q{Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k)),
              Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(p), 0.5, 3.0),
              Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p))};
  for (Eigen::Index c = 0; c < q.alpha.rows(); ++c) {
    for (Eigen::Index j = 0; j < q.alpha.cols(); ++j) q.alpha(c, j) = 0.8 * std::sin(1.0 + c * 7 + j);
  }
  return q;
}

CountMatrix study_like(std::size_t p, double level) {
  ScenarioSpec spec;
  spec.n = 50;
  spec.p = p;
  spec.zero_level = level;
  spec.seed = 3;
  return simulate_scenario(spec).without_empty_rows();
}

void BM_LogGamma(benchmark::State& state) {
  double x = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_gamma(x));
    x += 1e-3;
  }
}
BENCHMARK(BM_LogGamma);

void BM_DdmLogpmf(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const DdmParams q = bench_ddm(20, k);
  const CountMatrix d = sample(q, 100, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ddm_logpmf(q, d.row(0)));
}
BENCHMARK(BM_DdmLogpmf)->Arg(1)->Arg(3)->Arg(20);

void BM_FitDm(benchmark::State& state) {
  const CountMatrix d = study_like(static_cast<std::size_t>(state.range(0)), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(fit_dm(d).loglik);
}
BENCHMARK(BM_FitDm)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_FitDdm(benchmark::State& state) {
  const CountMatrix d = study_like(10, 0.5);
  FitConfig cfg;
  cfg.n_starts = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_ddm(d, static_cast<std::size_t>(state.range(0)), cfg).loglik);
  }
}
BENCHMARK(BM_FitDdm)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
