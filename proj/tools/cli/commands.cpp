#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

#include "options.hpp"
#include "overcount/errors.hpp"
#include "overcount/fit.hpp"
#include "overcount/io.hpp"
#include "overcount/sim.hpp"

namespace overcount::cli {

namespace fs = std::filesystem;

namespace {

CountMatrix load_counts(const std::string& path) {
  std::size_t dropped = 0;
  CountMatrix data = read_csv_file(path).without_empty_rows(&dropped);
  if (dropped > 0) std::cerr << "note: dropped " << dropped << " all-zero row(s)\n";
  if (data.empty()) throw InputError(path + ": no nonzero rows");
  return data;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create directory " + dir.string());
}

std::string fit_line(std::string_view label, const FitResult& r) {
  std::ostringstream os;
  os << label << ": loglik " << format_number(r.loglik) << ", aic " << format_number(r.aic)
     << ", bic " << format_number(r.bic) << ", " << r.n_params << " params"
     << (r.converged ? "" : " (not converged)");
  if (r.overparameterized) os << " [overparameterized]";
  return os.str();
}

std::string study_plot_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::comparison: return "variance_plot.csv";
    case StudyKind::asymptotic: return "asymptotic_plot.csv";
    case StudyKind::choose_k: return "k_plot.csv";
  }
  return "plot.csv";
}

std::string manifest_json(const StudyReport& report, const StudyOptions& o) {
  nlohmann::json j;
  j["schema"] = 1;
  j["study"] = std::string(to_string(report.kind));
  j["complete"] = report.complete;
  j["cells_total"] = report.cells_total;
  j["cells_done"] = report.cells_done;
  j["seed"] = o.scenario.seed;
  j["n"] = o.scenario.n;
  j["p"] = o.scenario.p;
  j["m"] = o.scenario.m;
  j["zero_mode"] = std::string(to_string(o.scenario.zero_mode));
  j["replicates"] = o.replicates;
  j["levels"] = o.levels;
  j["models"] = report.models;
  // (replicate, level) pairs whose every model cell finished.
  auto cells = nlohmann::json::array();
  std::size_t last_rep = static_cast<std::size_t>(-1);
  double last_level = -1.0;
  for (const auto& r : report.records) {
    if (r.replicate == last_rep && r.level == last_level) continue;
    last_rep = r.replicate;
    last_level = r.level;
    cells.push_back({{"replicate", r.replicate}, {"level", r.level}});
  }
  j["completed"] = std::move(cells);
  return j.dump(2) + "\n";
}

template <class Writer>
std::string render(const StudyReport& report, Writer&& w) {
  std::ostringstream os;
  w(report, os);
  return os.str();
}

}  // namespace

int cmd_fit(const FitArgs& a) {
  const Family family = parse_family(a.family);
  if (family == Family::ddm && !a.k) throw InputError("--family ddm requires --k");
  if (a.k && *a.k < 1) throw InputError("--k must be >= 1");
  FitConfig cfg;
  cfg.seed = a.seed;
  if (a.tol) {
    if (!(*a.tol > 0.0)) throw InputError("--tol must be positive");
    if (family == Family::ddm) cfg.tol_loglik = *a.tol;
    else cfg.optim_tol = *a.tol;
  }
  if (a.max_iter) {
    if (*a.max_iter < 1) throw InputError("--max-iter must be >= 1");
    cfg.max_em_iter = *a.max_iter;
    cfg.direct_max_iter = *a.max_iter;
  }
  if (a.starts) {
    if (*a.starts < 1) throw InputError("--starts must be >= 1");
    cfg.n_starts = *a.starts;
  }
  const CountMatrix data = load_counts(a.input);
  const FitResult r = fit_family(family, data, a.k.value_or(1), cfg);
  const std::string json = fit_result_to_json(r);
  if (a.out.empty()) {
    std::cout << json;
  } else {
    write_file_atomic(a.out, json);
    std::cout << fit_line(family == Family::ddm ? "DDM_" + std::to_string(*a.k)
                                                : std::string(to_string(family)),
                          r)
              << '\n';
  }
  if (!a.trace.empty()) {
    std::ostringstream os;
    write_trace_csv(r, os);
    write_file_atomic(a.trace, os.str());
  }
  return r.converged ? kOk : kNotConverged;
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.m < 0) throw InputError("--m must be nonnegative");
  if (a.p < 2) throw InputError("--p must be >= 2");
  if (!(a.zero_level >= 0.0 && a.zero_level < 1.0)) {
    throw InputError("--zero-level must lie in [0, 1)");
  }
  ScenarioSpec spec;
  spec.n = a.n;
  spec.p = a.p;
  spec.m = a.m;
  spec.zero_mode = parse_zero_mode(a.zero_mode);
  spec.zero_level = a.zero_level;
  spec.seed = a.seed;
  const std::string csv = to_csv(simulate_scenario(spec));
  if (a.out.empty()) std::cout << csv;
  else write_file_atomic(a.out, csv);
  return kOk;
}

int cmd_compare(const CompareArgs& a) {
  if (a.out.empty()) throw InputError("--out is required");
  std::vector<ModelSpec> models;
  const auto ks = parse_k_list(a.k_list);
  for (const auto& name : split_list(a.models)) {
    if (name == "ddm" || name == "DDM") {
      for (std::size_t k : ks) models.push_back({Family::ddm, k});
    } else {
      models.push_back(parse_model_spec(name));
    }
  }
  if (models.empty()) throw InputError("--models: no models");
  const CountMatrix data = load_counts(a.input);
  if (data.rows() < 2) throw InputError("compare needs at least two nonzero rows");
  const Moments empirical = empirical_moments(data);
  const count_t m_ref = reference_size(data);

  FitConfig cfg;
  cfg.seed = a.seed;
  if (a.starts) {
    if (*a.starts < 1) throw InputError("--starts must be >= 1");
    cfg.n_starts = *a.starts;
  }
  const fs::path dir(a.out);
  ensure_dir(dir);
  std::ostringstream table;
  table << "model,distance,bic,aic,status\n";
  std::size_t ok = 0;
  for (const auto& spec : models) {
    const std::string label = spec.label();
    try {
      const FitResult r = fit_family(spec.family, data, spec.k, cfg);
      const double dist = variance_distance(moments(r.params, m_ref), empirical);
      table << label << ',' << format_number(dist) << ',' << format_number(r.bic) << ','
            << format_number(r.aic) << ',' << (r.converged ? "ok" : "not_converged") << '\n';
      write_file_atomic(dir / (label + ".json"), fit_result_to_json(r));
      std::cout << fit_line(label, r) << ", distance " << format_number(dist) << '\n';
      ++ok;
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      table << label << ",,,,failed\n";
      std::cerr << label << ": failed: " << e.what() << '\n';
    }
  }
  write_file_atomic(dir / "table.csv", table.str());
  return ok > 0 ? kOk : kNotConverged;
}

int cmd_study(const StudyArgs& a, const std::atomic<bool>& cancel) {
  if (a.out.empty()) throw InputError("--out is required");
  const StudyKind kind = parse_study_kind(a.which);
  StudyOptions o = default_study_options(kind, a.full_grid);
  if (a.replicates) {
    if (*a.replicates < 1) throw InputError("--replicates must be >= 1");
    o.replicates = *a.replicates;
  }
  if (a.seed) o.scenario.seed = *a.seed;
  if (a.n) o.scenario.n = *a.n;
  if (a.p) o.scenario.p = *a.p;
  if (a.m) {
    if (*a.m < 0) throw InputError("--m must be nonnegative");
    o.scenario.m = *a.m;
  }
  if (!a.zero_mode.empty()) o.scenario.zero_mode = parse_zero_mode(a.zero_mode);
  if (!a.levels.empty()) o.levels = parse_levels(a.levels);
  if (!a.models.empty()) {
    o.models.clear();
    for (const auto& name : split_list(a.models)) o.models.push_back(parse_model_spec(name));
  }
  if (!a.k_list.empty()) {
    const auto ks = parse_k_list(a.k_list);
    std::vector<ModelSpec> models;
    for (const auto& m : o.models) {
      if (m.family != Family::ddm) models.push_back(m);
    }
    if (kind != StudyKind::comparison) models.clear();
    for (std::size_t k : ks) models.push_back({Family::ddm, k});
    o.models = std::move(models);
  }
  o.jobs = resolve_jobs(a.jobs);
  o.cancel = &cancel;
  const bool show_progress = !a.quiet && isatty(STDERR_FILENO);
  if (show_progress) {
    o.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\r" << done << "/" << total << " datasets" << std::flush;
    };
  }

  const fs::path dir(a.out);
  ensure_dir(dir);
  const StudyReport report = run_study(o);
  if (show_progress) std::cerr << '\n';

  write_file_atomic(dir / "records.csv", render(report, write_records_csv));
  write_file_atomic(dir / "summary.csv", render(report, write_summary_csv));
  write_file_atomic(dir / "summary.json", summary_json(report));
  switch (kind) {
    case StudyKind::comparison:
      write_file_atomic(dir / study_plot_name(kind), render(report, write_variance_plot_csv));
      break;
    case StudyKind::asymptotic:
      write_file_atomic(dir / study_plot_name(kind), render(report, write_asymptotic_plot_csv));
      break;
    case StudyKind::choose_k:
      write_file_atomic(dir / study_plot_name(kind), render(report, write_k_plot_csv));
      break;
  }
  write_file_atomic(dir / "manifest.json", manifest_json(report, o));
  std::cout << study_digest(report);
  if (!report.complete) {
    std::cerr << "interrupted: partial results written to " << dir.string() << '\n';
    return kInterrupted;
  }
  return kOk;
}

}  // namespace overcount::cli
