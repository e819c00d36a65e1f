#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "overcount/counts.hpp"
#include "overcount/fit.hpp"
#include "overcount/models.hpp"
#include "overcount/params.hpp"

namespace overcount {

enum class ZeroMode { random, smallest };

std::string_view to_string(ZeroMode mode);
/// Accepts "random" and "smallest" (also "smallest-first"). Throws InputError.
ZeroMode parse_zero_mode(std::string_view name);

struct ScenarioSpec {
  std::size_t n = 50;
  std::size_t p = 20;
  count_t m = 100;
  ZeroMode zero_mode = ZeroMode::random;
  double zero_level = 0.0;
  std::uint64_t seed = 1;
};

/// p i.i.d. Uniform(0, 1) values, normalized.
Eigen::VectorXd draw_uniform_proportions(std::size_t p, std::uint64_t seed);

/// n i.i.d. Multinomial(pi, m) rows with pi from draw_uniform_proportions.
CountMatrix generate_base(const ScenarioSpec& spec);
/// Same, with a caller-supplied pi.
CountMatrix generate_base(const ScenarioSpec& spec, const Eigen::VectorXd& pi);

struct Inflation {
  CountMatrix data;
  std::size_t zeros_added = 0;
  /// Set when the matrix already had at least the target number of zeros.
  bool already_at_target = false;
};

/// Number of zero cells the inflation targets: ceil(level * n * p).
std::size_t zero_target(std::size_t cells, double level);

/// Zeroes nonzero cells, visited in a seed-determined uniform random order,
/// until the target zero count is reached. With a fixed seed the zeroed set
/// at a lower level is a subset of the one at a higher level.
Inflation inflate_zeros_random(const CountMatrix& data, double level, std::uint64_t seed);

/// Zeroes nonzero cells in ascending order of their value (ties broken at
/// random with the seed) until the target zero count is reached.
Inflation inflate_zeros_smallest(const CountMatrix& data, double level, std::uint64_t seed);

Inflation inflate_zeros(const CountMatrix& data, ZeroMode mode, double level,
                        std::uint64_t seed);

/// generate_base followed by the scenario's zero inflation, using
/// independent streams derived from spec.seed.
CountMatrix simulate_scenario(const ScenarioSpec& spec);

/// Column sample means and covariance (denominator n - 1). Throws InputError
/// when n < 2.
Moments empirical_moments(const CountMatrix& data);

/// Euclidean distance between the variance (diagonal) vectors.
double variance_distance(const Moments& model, const Moments& empirical);
/// Frobenius distance between full covariance matrices.
double covariance_distance(const Moments& model, const Moments& empirical);
/// Mean of the per-category variances.
double variance_summary(const Moments& moments);

/// round(mean row total), at least 1.
count_t reference_size(const CountMatrix& data);

// ---------------------------------------------------------------------------
// Studies

/// A model in a study grid: a family plus K for DDM.
struct ModelSpec {
  Family family = Family::mn;
  std::size_t k = 1;

  /// "MN", "DM", ..., "DDM_10".
  std::string label() const;
  bool operator==(const ModelSpec&) const = default;
};

/// Accepts family names ("dm") and DDM with K as "ddm_3", "ddm:3" or "ddm3",
/// case-insensitively. Throws InputError.
ModelSpec parse_model_spec(std::string_view text);

enum class StudyKind { comparison, asymptotic, choose_k };

std::string_view to_string(StudyKind kind);
/// Accepts "comparison", "asymptotic", "choose-k".
StudyKind parse_study_kind(std::string_view name);

struct StudyOptions {
  StudyKind kind = StudyKind::comparison;
  /// n, p, m, zero_mode and the master seed; zero_level is taken from levels.
  ScenarioSpec scenario;
  std::vector<double> levels;
  std::vector<ModelSpec> models;
  std::size_t replicates = 20;
  FitConfig fit;
  /// Draw pi once per study instead of once per dataset.
  bool fixed_pi = false;
  /// Compare full covariance matrices (Frobenius) instead of variances.
  bool frobenius = false;
  /// Worker threads; 0 means hardware concurrency.
  std::size_t jobs = 1;
  /// Checked between cells; when set, remaining cells are skipped.
  const std::atomic<bool>* cancel = nullptr;
  /// Called after each completed job with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Desk-scale defaults for each study: n = 50, m = 100, p = 10 for the
/// comparison study and p = 20 for the K studies.
StudyOptions default_study_options(StudyKind kind, bool full_grid = false);

/// One (replicate, level, model) cell. The model label "EMPIRICAL" carries
/// the empirical variance summary of the dataset itself.
struct CellRecord {
  std::string scenario;
  double level = 0.0;
  std::string model;
  std::size_t replicate = 0;
  bool ok = false;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double distance = 0.0;
  double var_summary = 0.0;
  bool converged = false;
  std::size_t dropped_rows = 0;
  std::string error;
};

/// Means over the successful replicates of one (level, model) cell.
struct CellSummary {
  double level = 0.0;
  std::string model;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double mean_loglik = 0.0;
  double mean_aic = 0.0;
  double mean_bic = 0.0;
  double mean_distance = 0.0;
  double mean_var_summary = 0.0;
};

struct StudyReport {
  StudyKind kind = StudyKind::comparison;
  std::string scenario;
  std::size_t replicates = 0;
  std::vector<double> levels;
  std::vector<std::string> models;
  /// Ordered by (replicate, level, model) regardless of scheduling.
  std::vector<CellRecord> records;
  /// Ordered by (level, model) with the EMPIRICAL row first per level.
  std::vector<CellSummary> summaries;
  /// False when the run was cancelled before every cell finished.
  bool complete = true;
  std::size_t cells_total = 0;
  std::size_t cells_done = 0;

  const CellSummary* summary(double level, std::string_view model) const;
};

StudyReport run_study(const StudyOptions& options);

/// Comparison study: every model at every level.
StudyReport run_comparison_study(const std::vector<double>& levels,
                                 const std::vector<ModelSpec>& models, std::size_t replicates,
                                 const ScenarioSpec& scenario, const FitConfig& fit = {},
                                 std::size_t jobs = 1);

/// DDM for each K at a single level; var_summary tracks the fitted variance.
StudyReport run_asymptotic_study(const std::vector<std::size_t>& k_values, double level,
                                 std::size_t replicates, const ScenarioSpec& scenario,
                                 const FitConfig& fit = {}, std::size_t jobs = 1);

/// DDM for each K at a single level, each K warm-started from the previous
/// one within a replicate.
StudyReport run_choose_k_study(const std::vector<std::size_t>& k_values, double level,
                               std::size_t replicates, const ScenarioSpec& scenario,
                               const FitConfig& fit = {}, std::size_t jobs = 1);

/// Long CSV: scenario,level,model,replicate,loglik,aic,bic,distance,var_summary,
/// followed by converged,dropped_rows,status.
void write_records_csv(const StudyReport& report, std::ostream& out);
/// Per (level, model) means.
void write_summary_csv(const StudyReport& report, std::ostream& out);
/// JSON with the options echo and per-cell means.
std::string summary_json(const StudyReport& report);
/// level followed by one mean variance-summary column per model.
void write_variance_plot_csv(const StudyReport& report, std::ostream& out);
/// k,aic,bic,loglik (DDM models only, first level).
void write_k_plot_csv(const StudyReport& report, std::ostream& out);
/// Per-K mean fitted versus empirical variance summary (first level).
void write_asymptotic_plot_csv(const StudyReport& report, std::ostream& out);

/// Short human-readable digest: per-level winners by distance and AIC, or
/// the argmin-AIC K and the BIC trend.
std::string study_digest(const StudyReport& report);

}  // namespace overcount
