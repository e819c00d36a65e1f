#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "overcount/errors.hpp"
#include "overcount/random.hpp"
#include "overcount/sim.hpp"

namespace overcount {

namespace {

constexpr std::string_view kEmpirical = "EMPIRICAL";
constexpr std::uint64_t kPiStream = 1;
constexpr std::uint64_t kRowStream = 2;
constexpr std::uint64_t kZeroStream = 3;
constexpr std::uint64_t kFitStream = 4;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Dataset of one (replicate, level) with all-zero rows removed.
struct Dataset {
  CountMatrix data;
  std::size_t dropped = 0;
};

Dataset make_dataset(const StudyOptions& o, std::size_t replicate, double level) {
  const std::uint64_t master = o.scenario.seed;
  const auto rep = static_cast<std::uint64_t>(replicate);
  const Eigen::VectorXd pi =
      o.fixed_pi ? draw_uniform_proportions(o.scenario.p, derive_seed(master, {kPiStream}))
                 : draw_uniform_proportions(o.scenario.p, derive_seed(master, {rep, kPiStream}));
  ScenarioSpec spec = o.scenario;
  spec.seed = derive_seed(master, {rep, kRowStream});
  const CountMatrix base = generate_base(spec, pi);
  // One stream per replicate for every level keeps the zeroed sets nested.
  const Inflation inf =
      inflate_zeros(base, o.scenario.zero_mode, level, derive_seed(master, {rep, kZeroStream}));
  Dataset d;
  d.data = inf.data.without_empty_rows(&d.dropped);
  return d;
}

std::vector<CellRecord> run_job(const StudyOptions& o, std::size_t replicate,
                                std::size_t level_index) {
  const double level = o.levels[level_index];
  const std::string scenario(to_string(o.scenario.zero_mode));
  std::vector<CellRecord> out;

  CellRecord emp;
  emp.scenario = scenario;
  emp.level = level;
  emp.model = std::string(kEmpirical);
  emp.replicate = replicate;

  Dataset d;
  Moments empirical;
  try {
    d = make_dataset(o, replicate, level);
    empirical = empirical_moments(d.data);
    emp.ok = true;
    emp.converged = true;
    emp.var_summary = variance_summary(empirical);
    emp.dropped_rows = d.dropped;
  } catch (const std::exception& e) {
    emp.error = e.what();
    out.push_back(emp);
    for (const auto& m : o.models) {
      CellRecord r = emp;
      r.model = m.label();
      out.push_back(std::move(r));
    }
    return out;
  }
  out.push_back(emp);

  const count_t m_ref = reference_size(d.data);
  std::optional<DdmParams> previous_ddm;
  for (std::size_t mi = 0; mi < o.models.size(); ++mi) {
    const ModelSpec& spec = o.models[mi];
    CellRecord r;
    r.scenario = scenario;
    r.level = level;
    r.model = spec.label();
    r.replicate = replicate;
    r.dropped_rows = d.dropped;
    FitConfig cfg = o.fit;
    cfg.seed = derive_seed(o.scenario.seed, {static_cast<std::uint64_t>(replicate),
                                             static_cast<std::uint64_t>(level_index),
                                             static_cast<std::uint64_t>(mi), kFitStream});
    try {
      FitResult fit;
      if (spec.family == Family::ddm && o.kind == StudyKind::choose_k && previous_ddm &&
          previous_ddm->components() < spec.k) {
        DdmParams init = *previous_ddm;
        while (init.components() < spec.k) init = split_heaviest_component(init);
        fit = fit_ddm(d.data, spec.k, cfg, init);
      } else {
        fit = fit_family(spec.family, d.data, spec.k, cfg);
      }
      if (spec.family == Family::ddm) previous_ddm = std::get<DdmParams>(fit.params);
      const Moments mm = moments(fit.params, m_ref);
      r.ok = true;
      r.converged = fit.converged;
      r.loglik = fit.loglik;
      r.aic = fit.aic;
      r.bic = fit.bic;
      r.distance = o.frobenius ? covariance_distance(mm, empirical) : variance_distance(mm, empirical);
      r.var_summary = variance_summary(mm);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

void summarize(StudyReport& report) {
  std::vector<std::string> labels{std::string(kEmpirical)};
  labels.insert(labels.end(), report.models.begin(), report.models.end());
  for (double level : report.levels) {
    for (const auto& label : labels) {
      CellSummary s;
      s.level = level;
      s.model = label;
      for (const auto& r : report.records) {
        if (r.level != level || r.model != label) continue;
        if (!r.ok) {
          ++s.n_failed;
          continue;
        }
        ++s.n_ok;
        s.mean_loglik += r.loglik;
        s.mean_aic += r.aic;
        s.mean_bic += r.bic;
        s.mean_distance += r.distance;
        s.mean_var_summary += r.var_summary;
      }
      if (s.n_ok > 0) {
        const double k = static_cast<double>(s.n_ok);
        s.mean_loglik /= k;
        s.mean_aic /= k;
        s.mean_bic /= k;
        s.mean_distance /= k;
        s.mean_var_summary /= k;
      } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.mean_loglik = s.mean_aic = s.mean_bic = s.mean_distance = s.mean_var_summary = nan;
      }
      report.summaries.push_back(std::move(s));
    }
  }
}

std::vector<std::size_t> ladder(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v;
  for (std::size_t k = from; k <= to; ++k) v.push_back(k);
  return v;
}

std::vector<ModelSpec> ddm_models(const std::vector<std::size_t>& ks) {
  std::vector<ModelSpec> v;
  for (std::size_t k : ks) v.push_back({Family::ddm, k});
  return v;
}

// Mean over replicates of |fitted - empirical| variance summary for a model.
double mean_gap(const StudyReport& report, double level, const std::string& model) {
  std::map<std::size_t, double> emp;
  for (const auto& r : report.records) {
    if (r.level == level && r.model == kEmpirical && r.ok) emp[r.replicate] = r.var_summary;
  }
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : report.records) {
    if (r.level != level || r.model != model || !r.ok) continue;
    auto it = emp.find(r.replicate);
    if (it == emp.end()) continue;
    s += std::abs(r.var_summary - it->second);
    ++n;
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

nlohmann::json json_num(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

std::string ModelSpec::label() const {
  std::string s(to_string(family));
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (family == Family::ddm) s += "_" + std::to_string(k);
  return s;
}

ModelSpec parse_model_spec(std::string_view text) {
  const std::string t = lower(text);
  if (t.rfind("ddm", 0) == 0) {
    std::string_view rest(t);
    rest.remove_prefix(3);
    if (!rest.empty() && (rest.front() == '_' || rest.front() == ':')) rest.remove_prefix(1);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), k);
    if (rest.empty() || ec != std::errc() || ptr != rest.data() + rest.size() || k < 1) {
      throw InputError("DDM model needs a component count, e.g. ddm_3 (got '" +
                       std::string(text) + "')");
    }
    return {Family::ddm, k};
  }
  return {parse_family(t), 1};
}

std::string_view to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::comparison: return "comparison";
    case StudyKind::asymptotic: return "asymptotic";
    case StudyKind::choose_k: return "choose-k";
  }
  return "comparison";
}

StudyKind parse_study_kind(std::string_view name) {
  if (name == "comparison") return StudyKind::comparison;
  if (name == "asymptotic") return StudyKind::asymptotic;
  if (name == "choose-k" || name == "choose_k") return StudyKind::choose_k;
  throw InputError("unknown study '" + std::string(name) +
                   "' (expected comparison, asymptotic or choose-k)");
}

StudyOptions default_study_options(StudyKind kind, bool full_grid) {
  StudyOptions o;
  o.kind = kind;
  o.scenario.n = 50;
  o.scenario.p = full_grid || kind != StudyKind::comparison ? 20 : 10;
  o.scenario.m = 100;
  o.scenario.zero_mode = ZeroMode::random;
  o.scenario.seed = 1;
  // Desk-scale runs trade a little optimizer precision for time; the full
  // grid keeps the library defaults.
  if (!full_grid) {
    o.fit.n_starts = 2;
    o.fit.tol_loglik = 1e-4;
    o.fit.max_em_iter = 200;
    o.fit.optim_tol = 1e-5;
    o.fit.mstep_max_iter = 50;
  }
  switch (kind) {
    case StudyKind::comparison:
      for (int i = 0; i < 10; ++i) o.levels.push_back(i / 10.0);
      o.replicates = full_grid ? 100 : 20;
      if (full_grid) {
        o.models = {{Family::mn, 1},  {Family::dm, 1},  {Family::rcm, 1}, {Family::nm, 1},
                    {Family::gdm, 1}, {Family::ddm, 2}, {Family::ddm, 3}, {Family::ddm, 20}};
      } else {
        o.models = {{Family::mn, 1}, {Family::dm, 1}, {Family::gdm, 1}, {Family::ddm, 2},
                    {Family::ddm, 10}};
      }
      break;
    case StudyKind::asymptotic:
      o.levels = {0.5};
      o.replicates = full_grid ? 10 : 5;
      o.models = ddm_models(full_grid ? ladder(1, 50) : std::vector<std::size_t>{1, 2, 5, 10, 20});
      break;
    case StudyKind::choose_k:
      o.levels = {0.5};
      o.replicates = full_grid ? 100 : 10;
      o.models = ddm_models(full_grid ? ladder(1, 15) : ladder(1, 8));
      break;
  }
  return o;
}

const CellSummary* StudyReport::summary(double level, std::string_view model) const {
  for (const auto& s : summaries) {
    if (s.level == level && s.model == model) return &s;
  }
  return nullptr;
}

StudyReport run_study(const StudyOptions& o) {
  if (o.replicates < 1) throw InputError("replicates must be >= 1");
  if (o.levels.empty()) throw InputError("at least one zero level is required");
  if (o.models.empty()) throw InputError("at least one model is required");
  for (double level : o.levels) zero_target(o.scenario.n * o.scenario.p, level);
  if (o.scenario.p < 2) throw InputError("p must be >= 2");
  if (o.scenario.n < 2) throw InputError("n must be >= 2");

  StudyReport report;
  report.kind = o.kind;
  report.scenario = std::string(to_string(o.scenario.zero_mode));
  report.replicates = o.replicates;
  report.levels = o.levels;
  for (const auto& m : o.models) report.models.push_back(m.label());

  const std::size_t n_jobs = o.replicates * o.levels.size();
  report.cells_total = n_jobs;
  std::vector<std::vector<CellRecord>> results(n_jobs);
  std::vector<char> done(n_jobs, 0);

  std::size_t workers = o.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : o.jobs;
  workers = std::min(workers, n_jobs);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::mutex progress_mutex;
  auto work = [&] {
    for (;;) {
      if (o.cancel && o.cancel->load()) return;
      const std::size_t j = next.fetch_add(1);
      if (j >= n_jobs) return;
      results[j] = run_job(o, j / o.levels.size(), j % o.levels.size());
      done[j] = 1;
      const std::size_t f = finished.fetch_add(1) + 1;
      if (o.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        o.progress(f, n_jobs);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (std::size_t j = 0; j < n_jobs; ++j) {
    if (!done[j]) continue;
    ++report.cells_done;
    for (auto& r : results[j]) report.records.push_back(std::move(r));
  }
  report.complete = report.cells_done == n_jobs;
  summarize(report);
  return report;
}

StudyReport run_comparison_study(const std::vector<double>& levels,
                                 const std::vector<ModelSpec>& models, std::size_t replicates,
                                 const ScenarioSpec& scenario, const FitConfig& fit,
                                 std::size_t jobs) {
  StudyOptions o;
  o.kind = StudyKind::comparison;
  o.scenario = scenario;
  o.levels = levels;
  o.models = models;
  o.replicates = replicates;
  o.fit = fit;
  o.jobs = jobs;
  return run_study(o);
}

StudyReport run_asymptotic_study(const std::vector<std::size_t>& k_values, double level,
                                 std::size_t replicates, const ScenarioSpec& scenario,
                                 const FitConfig& fit, std::size_t jobs) {
  if (k_values.empty()) throw InputError("k_values must be nonempty");
  StudyOptions o;
  o.kind = StudyKind::asymptotic;
  o.scenario = scenario;
  o.levels = {level};
  o.models = ddm_models(k_values);
  o.replicates = replicates;
  o.fit = fit;
  o.jobs = jobs;
  return run_study(o);
}

StudyReport run_choose_k_study(const std::vector<std::size_t>& k_values, double level,
                               std::size_t replicates, const ScenarioSpec& scenario,
                               const FitConfig& fit, std::size_t jobs) {
  if (k_values.empty()) throw InputError("k_values must be nonempty");
  StudyOptions o;
  o.kind = StudyKind::choose_k;
  o.scenario = scenario;
  o.levels = {level};
  o.models = ddm_models(k_values);
  o.replicates = replicates;
  o.fit = fit;
  o.jobs = jobs;
  return run_study(o);
}

void write_records_csv(const StudyReport& report, std::ostream& out) {
  out << "scenario,level,model,replicate,loglik,aic,bic,distance,var_summary,converged,"
         "dropped_rows,status\n";
  for (const auto& r : report.records) {
    out << r.scenario << ',' << num(r.level) << ',' << r.model << ',' << r.replicate << ',';
    const bool fitted = r.ok && r.model != kEmpirical;
    if (fitted) {
      out << num(r.loglik) << ',' << num(r.aic) << ',' << num(r.bic) << ',' << num(r.distance);
    } else {
      out << ",,,";
    }
    out << ',' << (r.ok ? num(r.var_summary) : "") << ',' << (r.converged ? 1 : 0) << ','
        << r.dropped_rows << ',' << (r.ok ? "ok" : "failed") << '\n';
  }
}

void write_summary_csv(const StudyReport& report, std::ostream& out) {
  out << "scenario,level,model,n_ok,n_failed,mean_loglik,mean_aic,mean_bic,mean_distance,"
         "mean_var_summary\n";
  for (const auto& s : report.summaries) {
    out << report.scenario << ',' << num(s.level) << ',' << s.model << ',' << s.n_ok << ','
        << s.n_failed << ',';
    if (s.model == kEmpirical) {
      out << ",,,," << num(s.mean_var_summary) << '\n';
    } else {
      out << num(s.mean_loglik) << ',' << num(s.mean_aic) << ',' << num(s.mean_bic) << ','
          << num(s.mean_distance) << ',' << num(s.mean_var_summary) << '\n';
    }
  }
}

std::string summary_json(const StudyReport& report) {
  nlohmann::json j;
  j["schema"] = 1;
  j["study"] = std::string(to_string(report.kind));
  j["scenario"] = report.scenario;
  j["replicates"] = report.replicates;
  j["levels"] = report.levels;
  j["models"] = report.models;
  j["complete"] = report.complete;
  j["cells_total"] = report.cells_total;
  j["cells_done"] = report.cells_done;
  auto cells = nlohmann::json::array();
  for (const auto& s : report.summaries) {
    cells.push_back({{"level", s.level},
                     {"model", s.model},
                     {"n_ok", s.n_ok},
                     {"n_failed", s.n_failed},
                     {"mean_loglik", json_num(s.mean_loglik)},
                     {"mean_aic", json_num(s.mean_aic)},
                     {"mean_bic", json_num(s.mean_bic)},
                     {"mean_distance", json_num(s.mean_distance)},
                     {"mean_var_summary", json_num(s.mean_var_summary)}});
  }
  j["cells"] = std::move(cells);
  return j.dump(2) + "\n";
}

void write_variance_plot_csv(const StudyReport& report, std::ostream& out) {
  out << "level," << kEmpirical;
  for (const auto& m : report.models) out << ',' << m;
  out << '\n';
  for (double level : report.levels) {
    out << num(level);
    const auto* e = report.summary(level, kEmpirical);
    out << ',' << (e ? num(e->mean_var_summary) : "");
    for (const auto& m : report.models) {
      const auto* s = report.summary(level, m);
      out << ',' << (s ? num(s->mean_var_summary) : "");
    }
    out << '\n';
  }
}

void write_k_plot_csv(const StudyReport& report, std::ostream& out) {
  out << "k,mean_aic,mean_bic,mean_loglik,n_ok\n";
  if (report.levels.empty()) return;
  const double level = report.levels.front();
  for (const auto& m : report.models) {
    const ModelSpec spec = parse_model_spec(m);
    if (spec.family != Family::ddm) continue;
    const auto* s = report.summary(level, m);
    if (!s) continue;
    out << spec.k << ',' << num(s->mean_aic) << ',' << num(s->mean_bic) << ','
        << num(s->mean_loglik) << ',' << s->n_ok << '\n';
  }
}

void write_asymptotic_plot_csv(const StudyReport& report, std::ostream& out) {
  out << "k,fitted_var_summary,empirical_var_summary,mean_abs_gap\n";
  if (report.levels.empty()) return;
  const double level = report.levels.front();
  const auto* e = report.summary(level, kEmpirical);
  for (const auto& m : report.models) {
    const ModelSpec spec = parse_model_spec(m);
    if (spec.family != Family::ddm) continue;
    const auto* s = report.summary(level, m);
    if (!s) continue;
    out << spec.k << ',' << num(s->mean_var_summary) << ','
        << (e ? num(e->mean_var_summary) : "") << ',' << num(mean_gap(report, level, m)) << '\n';
  }
}

std::string study_digest(const StudyReport& report) {
  std::ostringstream os;
  os << to_string(report.kind) << " study, scenario " << report.scenario << ", "
     << report.replicates << " replicates";
  if (!report.complete) {
    os << " (incomplete: " << report.cells_done << "/" << report.cells_total << " cells)";
  }
  os << '\n';
  if (report.kind == StudyKind::comparison) {
    for (double level : report.levels) {
      std::string best_dist, best_aic;
      double d = std::numeric_limits<double>::infinity();
      double a = d;
      for (const auto& m : report.models) {
        const auto* s = report.summary(level, m);
        if (!s || s->n_ok == 0) continue;
        if (s->mean_distance < d) {
          d = s->mean_distance;
          best_dist = m;
        }
        if (s->mean_aic < a) {
          a = s->mean_aic;
          best_aic = m;
        }
      }
      const auto* e = report.summary(level, kEmpirical);
      os << "level " << num(level) << ": empirical var " << (e ? num(e->mean_var_summary) : "-")
         << ", closest variance " << (best_dist.empty() ? "-" : best_dist) << " (" << num(d)
         << "), best AIC " << (best_aic.empty() ? "-" : best_aic) << '\n';
    }
    return os.str();
  }
  const double level = report.levels.front();
  std::size_t best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  double prev_bic = std::numeric_limits<double>::quiet_NaN();
  for (const auto& m : report.models) {
    const ModelSpec spec = parse_model_spec(m);
    const auto* s = report.summary(level, m);
    if (!s || s->n_ok == 0) continue;
    os << "K=" << spec.k << ": aic " << num(s->mean_aic) << ", bic " << num(s->mean_bic);
    if (report.kind == StudyKind::asymptotic) {
      os << ", var " << num(s->mean_var_summary) << ", |gap| " << num(mean_gap(report, level, m));
    } else if (!std::isnan(prev_bic)) {
      os << (s->mean_bic > prev_bic ? ", bic up" : ", bic down");
    }
    os << '\n';
    prev_bic = s->mean_bic;
    if (s->mean_aic < best) {
      best = s->mean_aic;
      best_k = spec.k;
    }
  }
  if (const auto* e = report.summary(level, kEmpirical)) {
    os << "empirical var " << num(e->mean_var_summary) << '\n';
  }
  if (best_k > 0) os << "argmin AIC: K=" << best_k << '\n';
  return os.str();
}

}  // namespace overcount
