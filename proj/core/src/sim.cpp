#include "overcount/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "overcount/errors.hpp"
#include "overcount/random.hpp"

namespace overcount {

namespace {

constexpr std::uint64_t kPiStream = 1;
constexpr std::uint64_t kRowStream = 2;
constexpr std::uint64_t kZeroStream = 3;

void check_level(double level) {
  if (!(level >= 0.0 && level < 1.0)) {
    throw InputError("zero level must lie in [0, 1), got " + std::to_string(level));
  }
}

struct Cell {
  count_t value;
  std::uint64_t key;
  std::size_t index;
};

Inflation zero_in_order(const CountMatrix& data, double level, const std::vector<Cell>& order) {
  Inflation out{data, 0, false};
  const std::size_t target = zero_target(data.cells().size(), level);
  std::size_t zeros = data.zero_cells();
  if (zeros >= target) {
    out.already_at_target = zeros > target;
    return out;
  }
  const std::size_t p = data.cols();
  for (const Cell& c : order) {
    if (zeros >= target) break;
    if (c.value == 0) continue;
    out.data(c.index / p, c.index % p) = 0;
    ++zeros;
    ++out.zeros_added;
  }
  return out;
}

std::vector<Cell> keyed_cells(const CountMatrix& data, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<Cell> cells;
  cells.reserve(data.cells().size());
  const std::size_t p = data.cols();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < p; ++j) cells.push_back({data(i, j), rng(), i * p + j});
  }
  return cells;
}

}  // namespace

std::string_view to_string(ZeroMode mode) {
  return mode == ZeroMode::random ? "random" : "smallest";
}

ZeroMode parse_zero_mode(std::string_view name) {
  if (name == "random") return ZeroMode::random;
  if (name == "smallest" || name == "smallest-first") return ZeroMode::smallest;
  throw InputError("unknown zero mode '" + std::string(name) + "' (expected random or smallest)");
}

Eigen::VectorXd draw_uniform_proportions(std::size_t p, std::uint64_t seed) {
  if (p < 2) throw InputError("need at least two categories");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd pi(static_cast<Eigen::Index>(p));
  do {
    for (Eigen::Index j = 0; j < pi.size(); ++j) pi[j] = u(rng);
  } while (pi.sum() <= 0.0);
  return pi / pi.sum();
}

CountMatrix generate_base(const ScenarioSpec& spec) {
  return generate_base(spec, draw_uniform_proportions(spec.p, derive_seed(spec.seed, {kPiStream})));
}

CountMatrix generate_base(const ScenarioSpec& spec, const Eigen::VectorXd& pi) {
  if (spec.n < 1) throw InputError("n must be >= 1");
  if (spec.m < 1) throw InputError("m must be >= 1");
  if (static_cast<std::size_t>(pi.size()) != spec.p) throw InputError("pi length differs from p");
  return sample(MnParams{pi}, spec.m, spec.n, derive_seed(spec.seed, {kRowStream}));
}

std::size_t zero_target(std::size_t cells, double level) {
  check_level(level);
  // Guard against products such as 0.3 * 500 = 150.00000000000003.
  return static_cast<std::size_t>(std::ceil(level * static_cast<double>(cells) - 1e-9));
}

Inflation inflate_zeros_random(const CountMatrix& data, double level, std::uint64_t seed) {
  check_level(level);
  auto cells = keyed_cells(data, seed);
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.key, a.index) < std::tie(b.key, b.index);
  });
  return zero_in_order(data, level, cells);
}

Inflation inflate_zeros_smallest(const CountMatrix& data, double level, std::uint64_t seed) {
  check_level(level);
  auto cells = keyed_cells(data, seed);
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.value, a.key, a.index) < std::tie(b.value, b.key, b.index);
  });
  return zero_in_order(data, level, cells);
}

Inflation inflate_zeros(const CountMatrix& data, ZeroMode mode, double level,
                        std::uint64_t seed) {
  return mode == ZeroMode::random ? inflate_zeros_random(data, level, seed)
                                  : inflate_zeros_smallest(data, level, seed);
}

CountMatrix simulate_scenario(const ScenarioSpec& spec) {
  const CountMatrix base = generate_base(spec);
  return inflate_zeros(base, spec.zero_mode, spec.zero_level, derive_seed(spec.seed, {kZeroStream}))
      .data;
}

Moments empirical_moments(const CountMatrix& data) {
  if (data.rows() < 2) throw InputError("empirical moments need at least two rows");
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto p = static_cast<Eigen::Index>(data.cols());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      x(i, j) = static_cast<double>(data(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    }
  }
  Moments out;
  out.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - out.mean.transpose();
  out.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  return out;
}

double variance_distance(const Moments& model, const Moments& empirical) {
  if (model.cov.rows() != empirical.cov.rows()) {
    throw std::invalid_argument("variance_distance: dimension mismatch");
  }
  return (model.variances() - empirical.variances()).norm();
}

double covariance_distance(const Moments& model, const Moments& empirical) {
  if (model.cov.rows() != empirical.cov.rows()) {
    throw std::invalid_argument("covariance_distance: dimension mismatch");
  }
  return (model.cov - empirical.cov).norm();
}

double variance_summary(const Moments& moments) { return moments.variances().mean(); }

count_t reference_size(const CountMatrix& data) {
  if (data.rows() == 0) throw InputError("data has no rows");
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) s += static_cast<double>(data.row_total(i));
  return std::max<count_t>(1, static_cast<count_t>(std::llround(s / static_cast<double>(data.rows()))));
}

}  // namespace overcount
