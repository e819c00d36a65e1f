#include <atomic>
#include <csignal>
#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "options.hpp"
#include "overcount/errors.hpp"

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

}  // namespace

int main(int argc, char** argv) {
  using namespace overcount::cli;

  CLI::App app{"Overdispersed multinomial count models: fitting, simulation and studies",
               "overcount"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "overcount 0.1.0");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one model family to a CSV of counts");
  fit_cmd->add_option("input", fit.input, "CSV of nonnegative integer counts")->required();
  fit_cmd->add_option("--family", fit.family, "mn, dm, rcm, nm, gdm or ddm")->required();
  fit_cmd->add_option("--k", fit.k, "Number of DDM components (required for ddm)");
  fit_cmd->add_option("--tol", fit.tol,
                      "EM log-likelihood tolerance (ddm) or gradient tolerance (other families)");
  fit_cmd->add_option("--max-iter", fit.max_iter, "EM or quasi-Newton iteration limit");
  fit_cmd->add_option("--starts", fit.starts, "Number of starting points");
  fit_cmd->add_option("--seed", fit.seed, "Seed for random starts")->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "FitResult JSON path (stdout when omitted)");
  fit_cmd->add_option("--trace", fit.trace, "Optional CSV of the log-likelihood trace");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a zero-inflated multinomial dataset");
  sim_cmd->add_option("--n", sim.n, "Rows")->capture_default_str();
  sim_cmd->add_option("--p", sim.p, "Categories")->capture_default_str();
  sim_cmd->add_option("--m", sim.m, "Trials per row before inflation")->capture_default_str();
  sim_cmd->add_option("--zero-mode", sim.zero_mode, "random or smallest")->capture_default_str();
  sim_cmd->add_option("--zero-level", sim.zero_level, "Target fraction of zero cells in [0, 1)")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "CSV path (stdout when omitted)");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Fit several models and tabulate distance, BIC, AIC");
  cmp_cmd->add_option("input", cmp.input, "CSV of nonnegative integer counts")->required();
  cmp_cmd->add_option("--models", cmp.models, "Comma-separated families; ddm expands over --k-list")
      ->capture_default_str();
  cmp_cmd->add_option("--k-list", cmp.k_list, "DDM component counts, e.g. 2,3 or 1..5")
      ->capture_default_str();
  cmp_cmd->add_option("--out", cmp.out, "Output directory")->required();
  cmp_cmd->add_option("--seed", cmp.seed, "Seed for random starts")->capture_default_str();
  cmp_cmd->add_option("--starts", cmp.starts, "Number of starting points");

  StudyArgs st;
  auto* st_cmd = app.add_subcommand("study", "Run a simulation study");
  st_cmd->add_option("--which", st.which, "comparison, asymptotic or choose-k")->required();
  st_cmd->add_option("--replicates", st.replicates, "Datasets per level");
  st_cmd->add_option("--levels", st.levels, "Zero levels, e.g. 0,0.5 or 0..0.9");
  st_cmd->add_option("--k-list", st.k_list, "DDM component counts, e.g. 1..8");
  st_cmd->add_option("--models", st.models, "Comparison models, e.g. mn,dm,gdm,ddm_2");
  st_cmd->add_option("--seed", st.seed, "Master seed");
  st_cmd->add_flag("--full-grid", st.full_grid, "Use the full-size grid instead of desk scale");
  st_cmd->add_option("--out", st.out, "Output directory")->required();
  st_cmd->add_option("--jobs", st.jobs, "Worker threads (default: OVERCOUNT_JOBS or 1; 0 = all cores)");
  st_cmd->add_option("--n", st.n, "Rows per dataset");
  st_cmd->add_option("--p", st.p, "Categories");
  st_cmd->add_option("--m", st.m, "Trials per row before inflation");
  st_cmd->add_option("--zero-mode", st.zero_mode, "random or smallest");
  st_cmd->add_flag("--quiet", st.quiet, "No progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (sim_cmd->parsed()) return cmd_simulate(sim);
    if (cmp_cmd->parsed()) return cmd_compare(cmp);
    std::signal(SIGINT, on_sigint);
    return cmd_study(st, g_cancel);
  } catch (const overcount::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNotConverged;
  }
}
