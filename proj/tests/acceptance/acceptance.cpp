// Acceptance gate: runs every acceptance criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "overcount/fit.hpp"
#include "overcount/models.hpp"
#include "overcount/sim.hpp"
#include "support.hpp"

namespace {

using namespace overcount;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::size_t study_jobs() {
  return std::max(1u, std::thread::hardware_concurrency());
}

// 1 ------------------------------------------------------------------------

Outcome normalization() {
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (Family f : testkit::all_families()) {
    for (int draw = 0; draw < 20; ++draw) {
      const FamilyParams q = testkit::random_params(f, 3, rng);
      double mass = 0.0;
      if (f == Family::nm) {
        for (count_t t = 0; t <= 40; ++t) mass += testkit::total_mass(q, t, 3);
      } else {
        mass = testkit::total_mass(q, 6, 3);
      }
      worst = std::max(worst, std::abs(mass - 1.0));
    }
  }
  return {worst <= 1e-8, "max |sum pmf - 1| = " + fmt("%.3g", worst) + " over 6 families x 20 draws"};
}

// 2 ------------------------------------------------------------------------

Outcome moment_suite() {
  std::mt19937_64 rng(2002);
  double worst = 0.0;
  std::string where;
  for (Family f : testkit::all_families()) {
    const FamilyParams q = testkit::random_params(f, 3, rng);
    const count_t m = 20;
    const CountMatrix draws = sample(q, m, 200000, 2002 + static_cast<std::uint64_t>(f));
    const Moments an = moments(q, m);
    const auto check = testkit::compare_moments(an, draws, true);
    const double z = std::max(check.worst_mean_z, check.worst_cov_z);
    if (z > worst) {
      worst = z;
      where = std::string(to_string(f));
    }
  }
  return {worst <= 4.0, "worst |analytic - MC| = " + fmt("%.2f", worst) + " SE (" + where +
                            "), 2e5 draws per family"};
}

// 3 ------------------------------------------------------------------------

Outcome gradient_suite() {
  std::mt19937_64 rng(3003);
  const double h = 1e-6;
  double worst = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    const std::size_t p = 2 + static_cast<std::size_t>(pair % 9);
    const std::size_t k = 1 + static_cast<std::size_t>(pair % 4);
    const DdmParams q = testkit::random_ddm(p, k, rng);
    std::vector<count_t> y(p);
    std::uniform_int_distribution<count_t> u(0, 30);
    for (auto& v : y) v = u(rng);
    const DdmScores s = ddm_scores(q, y);
    for (std::size_t c = 0; c < k; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      const auto f = [&](const VectorXd& beta, const MatrixXd& alpha) {
        DdmParams t = q;
        t.beta = beta;
        t.alpha = alpha;
        return dm_logpmf({t.theta(c)}, y);
      };
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
        VectorXd bp = q.beta, bm = q.beta;
        bp[j] += h;
        bm[j] -= h;
        const double fb = (f(bp, q.alpha) - f(bm, q.alpha)) / (2 * h);
        worst = std::max(worst, std::abs(s.beta(ci, j) - fb) / (1 + std::abs(s.beta(ci, j))));
        MatrixXd ap = q.alpha, am = q.alpha;
        ap(ci, j) += h;
        am(ci, j) -= h;
        const double fa = (f(q.beta, ap) - f(q.beta, am)) / (2 * h);
        worst = std::max(worst, std::abs(s.alpha(ci, j) - fa) / (1 + std::abs(s.alpha(ci, j))));
      }
    }
  }
  return {worst <= 1e-5, "max relative error = " + fmt("%.3g", worst) + " over 100 pairs"};
}

// 4 ------------------------------------------------------------------------

Outcome em_monotonicity() {
  const double levels[] = {0.0, 0.3, 0.5, 0.7};
  std::size_t violations = 0;
  std::size_t iterations = 0;
  double worst_drop = 0.0;
  for (std::uint64_t run = 0; run < 100; ++run) {
    ScenarioSpec spec;
    spec.n = 50;
    spec.p = 10;
    spec.m = 100;
    spec.zero_level = levels[run % 4];
    spec.seed = 4000 + run;
    const CountMatrix data = simulate_scenario(spec).without_empty_rows();
    FitConfig cfg;
    cfg.n_starts = 1;
    cfg.seed = run + 1;
    const FitResult r = fit_ddm(data, 2 + run % 2, cfg);
    for (std::size_t t = 1; t < r.trace.size(); ++t) {
      const double drop = r.trace[t - 1] - r.trace[t];
      worst_drop = std::max(worst_drop, drop);
      if (drop > 1e-8) ++violations;
    }
    iterations += r.trace.size();
  }
  return {violations == 0, std::to_string(violations) + " decreases > 1e-8 in " +
                               std::to_string(iterations) + " EM iterations (largest drop " +
                               fmt("%.3g", worst_drop) + ")"};
}

// 5 ------------------------------------------------------------------------

Outcome reductions() {
  std::mt19937_64 rng(5005);
  double ddm_dm = 0.0, gdm_dm = 0.0, rcm_mn = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const std::size_t p = 2 + static_cast<std::size_t>(draw % 4);
    const VectorXd theta = testkit::random_positive(p, rng);
    const DmParams dm{theta};
    const DdmParams ddm{VectorXd::Ones(1), theta, MatrixXd::Zero(1, static_cast<Eigen::Index>(p))};
    GdmParams gdm{theta.head(static_cast<Eigen::Index>(p) - 1),
                  VectorXd(static_cast<Eigen::Index>(p) - 1)};
    for (Eigen::Index j = 0; j + 1 < static_cast<Eigen::Index>(p); ++j) {
      gdm.beta[j] = theta.tail(static_cast<Eigen::Index>(p) - j - 1).sum();
    }
    const MnParams mn{testkit::random_simplex(p, rng)};
    const RcmParams rcm{mn.pi, 1e-12};
    testkit::for_each_composition(8, p, [&](const std::vector<count_t>& y) {
      const double ref = dm_logpmf(dm, y);
      ddm_dm = std::max(ddm_dm, std::abs(std::exp(ddm_logpmf(ddm, y)) - std::exp(ref)));
      gdm_dm = std::max(gdm_dm, std::abs(std::exp(gdm_logpmf(gdm, y)) - std::exp(ref)));
      rcm_mn = std::max(rcm_mn,
                        std::abs(std::exp(rcm_logpmf(rcm, y)) - std::exp(mn_logpmf(mn, y))));
    });
  }
  double fit_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioSpec spec;
    spec.n = 50;
    spec.p = 10;
    spec.zero_level = 0.1 * static_cast<double>(seed);
    spec.seed = 5000 + seed;
    const CountMatrix data = simulate_scenario(spec).without_empty_rows();
    fit_gap = std::max(fit_gap, std::abs(fit_ddm(data, 1).loglik - fit_dm(data).loglik));
  }
  const bool ok = ddm_dm <= 1e-10 && gdm_dm <= 1e-10 && rcm_mn <= 1e-6 && fit_gap <= 1e-4;
  return {ok, "DDM(K=1,a=0)-DM " + fmt("%.2g", ddm_dm) + ", GDM-DM " + fmt("%.2g", gdm_dm) +
                  ", RCM(1e-12)-MN " + fmt("%.2g", rcm_mn) + ", fitted DDM(K=1)-DM loglik " +
                  fmt("%.2g", fit_gap)};
}

// 6 ------------------------------------------------------------------------

Outcome parameter_count_check() {
  ScenarioSpec spec;
  spec.n = 50;
  spec.p = 20;
  spec.zero_level = 0.5;
  spec.seed = 6006;
  const CountMatrix data = simulate_scenario(spec).without_empty_rows();
  FitConfig cfg;
  cfg.n_starts = 1;
  cfg.max_em_iter = 20;
  const FitResult ddm = fit_ddm(data, 3, cfg);
  const FitResult mn = fit_mn(data);
  const std::size_t table = parameter_count(Family::ddm, 20, 3);
  const bool ok = table == 83 && ddm.n_params == 83 && mn.n_params == 20;
  return {ok, "DDM(p=20,K=3) " + std::to_string(ddm.n_params) + " parameters, MN " +
                  std::to_string(mn.n_params)};
}

// 7 ------------------------------------------------------------------------

bool unimodal_interior_peak(const std::vector<double>& v) {
  if (v.size() < 3) return false;
  const auto peak = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  if (peak == 0 || peak + 1 == v.size()) return false;
  for (std::size_t t = 1; t <= peak; ++t) {
    if (!(v[t] > v[t - 1])) return false;
  }
  for (std::size_t t = peak + 1; t < v.size(); ++t) {
    if (!(v[t] < v[t - 1])) return false;
  }
  return true;
}

Outcome comparison_shape() {
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
  std::size_t unimodal = 0, trajectories = 0;
  std::size_t ordered_seeds = 0;
  std::size_t ordered_reps = 0, reps = 0;
  std::vector<double> dm_aic, mn_aic;
  std::vector<double> levels;
  std::ostringstream means;
  for (std::uint64_t seed : seeds) {
    StudyOptions o = default_study_options(StudyKind::comparison);
    o.scenario.seed = seed;
    o.jobs = study_jobs();
    const StudyReport r = run_study(o);
    levels = r.levels;
    if (dm_aic.empty()) {
      dm_aic.assign(levels.size(), 0.0);
      mn_aic.assign(levels.size(), 0.0);
    }
    for (std::size_t rep = 0; rep < o.replicates; ++rep) {
      std::vector<double> traj;
      double mn = NAN, dm = NAN, ddm = NAN;
      for (const auto& rec : r.records) {
        if (rec.replicate != rep) continue;
        if (rec.model == "EMPIRICAL") traj.push_back(rec.var_summary);
        if (std::abs(rec.level - 0.5) < 1e-9 && rec.ok) {
          if (rec.model == "MN") mn = rec.distance;
          if (rec.model == "DM") dm = rec.distance;
          if (rec.model == "DDM_10") ddm = rec.distance;
        }
      }
      ++trajectories;
      if (unimodal_interior_peak(traj)) ++unimodal;
      ++reps;
      if (ddm < dm && dm < mn) ++ordered_reps;
    }
    const auto* s_mn = r.summary(0.5, "MN");
    const auto* s_dm = r.summary(0.5, "DM");
    const auto* s_ddm = r.summary(0.5, "DDM_10");
    const bool ordered = s_mn && s_dm && s_ddm && s_ddm->mean_distance < s_dm->mean_distance &&
                         s_dm->mean_distance < s_mn->mean_distance;
    if (ordered) ++ordered_seeds;
    if (s_mn && s_dm && s_ddm) {
      means << " [seed " << seed << ": " << fmt("%.2f", s_ddm->mean_distance) << " < "
            << fmt("%.2f", s_dm->mean_distance) << " < " << fmt("%.2f", s_mn->mean_distance)
            << "]";
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      dm_aic[l] += r.summary(levels[l], "DM")->mean_aic / std::size(seeds);
      mn_aic[l] += r.summary(levels[l], "MN")->mean_aic / std::size(seeds);
    }
  }
  bool aic_ok = true;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (levels[l] >= 0.3 - 1e-9 && !(dm_aic[l] < mn_aic[l])) aic_ok = false;
  }
  const double frac_uni = static_cast<double>(unimodal) / static_cast<double>(trajectories);
  const double frac_ord = static_cast<double>(ordered_seeds) / static_cast<double>(std::size(seeds));
  const bool ok = frac_uni >= 0.8 && frac_ord >= 0.8 && aic_ok;
  std::ostringstream os;
  os << "(a) unimodal " << unimodal << "/" << trajectories << "; (b) DDM_10<DM<MN at 0.5 in "
     << ordered_seeds << "/" << std::size(seeds) << " seeds (" << ordered_reps << "/" << reps
     << " datasets)" << means.str() << "; (c) DM AIC < MN AIC at levels >= 0.3: "
     << (aic_ok ? "yes" : "no");
  return {ok, os.str()};
}

// 8 ------------------------------------------------------------------------

Outcome asymptotic_k() {
  StudyOptions o = default_study_options(StudyKind::asymptotic);
  o.jobs = study_jobs();
  const StudyReport r = run_study(o);
  const double level = r.levels.front();
  std::size_t better = 0;
  std::ostringstream gaps;
  for (std::size_t rep = 0; rep < o.replicates; ++rep) {
    double emp = NAN, k2 = NAN, k20 = NAN;
    for (const auto& rec : r.records) {
      if (rec.replicate != rep || rec.level != level) continue;
      if (rec.model == "EMPIRICAL") emp = rec.var_summary;
      if (rec.model == "DDM_2" && rec.ok) k2 = rec.var_summary;
      if (rec.model == "DDM_20" && rec.ok) k20 = rec.var_summary;
    }
    const double g2 = std::abs(k2 - emp);
    const double g20 = std::abs(k20 - emp);
    if (g20 < g2) ++better;
    gaps << " " << fmt("%.2f", g2) << "->" << fmt("%.2f", g20);
  }
  const double frac = static_cast<double>(better) / static_cast<double>(o.replicates);
  return {frac >= 0.8, "gap K=20 < K=2 in " + std::to_string(better) + "/" +
                           std::to_string(o.replicates) + " replicates (|gap| K=2->K=20:" +
                           gaps.str() + ")"};
}

// 9 ------------------------------------------------------------------------

Outcome choose_k() {
  StudyOptions o = default_study_options(StudyKind::choose_k);
  o.jobs = study_jobs();
  const StudyReport r = run_study(o);
  const double level = r.levels.front();
  std::vector<std::size_t> ks;
  std::vector<double> aic, bic;
  for (const auto& m : o.models) {
    const auto* s = r.summary(level, m.label());
    if (!s || s->n_ok == 0) return {false, "no successful fits for " + m.label()};
    ks.push_back(m.k);
    aic.push_back(s->mean_aic);
    bic.push_back(s->mean_bic);
  }
  bool bic_up = true;
  for (std::size_t i = 1; i < ks.size(); ++i) {
    if (ks[i - 1] >= 2 && !(bic[i] > bic[i - 1])) bic_up = false;
  }
  const auto best = static_cast<std::size_t>(std::min_element(aic.begin(), aic.end()) - aic.begin());
  const bool interior = best != 0 && best + 1 != aic.size();
  std::ostringstream os;
  os << "BIC increasing for K>=2: " << (bic_up ? "yes" : "no") << "; argmin AIC K=" << ks[best]
     << (interior ? " (interior)" : " (endpoint)") << "; mean AIC:";
  for (double a : aic) os << " " << fmt("%.1f", a);
  os << "; mean BIC:";
  for (double b : bic) os << " " << fmt("%.1f", b);
  return {bic_up && interior, os.str()};
}

// 10 -----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& diff) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::size_t nb = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++nb;
  if (names.size() != nb || names.empty()) {
    diff = "different file sets";
    return false;
  }
  for (const auto& n : names) {
    if (slurp(a / n) != slurp(b / n)) {
      diff = n;
      return false;
    }
  }
  return true;
}

Outcome cli_determinism() {
#ifndef OVERCOUNT_CLI_PATH
  return {false, "command-line tool was not built"};
#else
  const fs::path cli = OVERCOUNT_CLI_PATH;
  const fs::path root = fs::temp_directory_path() / "overcount_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + cli.string() + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const std::string sim = "simulate --n 50 --p 20 --m 100 --zero-mode random --zero-level 0.5 "
                          "--seed 77 --out ";
  const std::string study = "study --which choose-k --k-list 1..3 --replicates 2 --seed 9 "
                            "--jobs 2 --quiet --out ";
  const std::string study2 = "study --which comparison --levels 0,0.5 --replicates 2 "
                             "--models mn,dm,ddm_2 --seed 4 --quiet --out ";
  int rc = 0;
  rc |= run(sim + (root / "a.csv").string());
  rc |= run(sim + (root / "b.csv").string());
  rc |= run(study + (root / "s1").string());
  rc |= run(study + (root / "s2").string());
  rc |= run(study2 + (root / "c1").string());
  rc |= run(study2 + (root / "c2").string());
  if (rc != 0) return {false, "a command exited with a nonzero status"};
  const bool sim_same = slurp(root / "a.csv") == slurp(root / "b.csv") &&
                        !slurp(root / "a.csv").empty();
  std::string diff1, diff2;
  const bool study_same = same_tree(root / "s1", root / "s2", diff1);
  const bool cmp_same = same_tree(root / "c1", root / "c2", diff2);
  fs::remove_all(root);
  std::string detail = "simulate identical: " + std::string(sim_same ? "yes" : "no") +
                       "; study outputs identical: " +
                       std::string(study_same && cmp_same ? "yes" : "no");
  if (!study_same) detail += " (" + diff1 + ")";
  if (!cmp_same) detail += " (" + diff2 + ")";
  return {sim_same && study_same && cmp_same, detail};
#endif
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "normalization suite", 60, normalization},
      {2, "moment suite", 120, moment_suite},
      {3, "gradient suite", 30, gradient_suite},
      {4, "EM monotonicity", 300, em_monotonicity},
      {5, "reduction identities", 60, reductions},
      {6, "parameter count", 60, parameter_count_check},
      {7, "comparison-study shape", 1800, comparison_shape},
      {8, "asymptotic-K", 1200, asymptotic_k},
      {9, "choose-K", 1200, choose_k},
      {10, "CLI determinism", 60, cli_determinism},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): "
              << out.detail << " [" << fmt("%.1f", secs) << " s"
              << (in_time ? "" : ", over the " + fmt("%.0f", c.limit_seconds) + " s limit") << "]"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
