#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "overcount/counts.hpp"

namespace overcount {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent stream identified by (master, keys...). The same
/// inputs always give the same seed regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

Rng make_rng(std::uint64_t seed);

/// log of a Gamma(shape, 1) variate; finite even when the variate itself
/// would underflow (shape << 1).
double draw_log_gamma(double shape, Rng& rng);

/// Dirichlet(concentration) draw, normalized in log space.
Eigen::VectorXd draw_dirichlet(const Eigen::VectorXd& concentration, Rng& rng);

/// Beta(a, b) draw via two gammas.
double draw_beta(double a, double b, Rng& rng);

/// Multinomial(m, probs) by sequential conditional binomials. probs need not
/// be exactly normalized.
void draw_multinomial(count_t m, const Eigen::VectorXd& probs, Rng& rng, std::span<count_t> out);

/// Index drawn with probability proportional to weights.
std::size_t draw_categorical(const Eigen::VectorXd& weights, Rng& rng);

}  // namespace overcount
