#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>

namespace overcount::cli {

struct FitArgs {
  std::string input;
  std::string family;
  std::optional<std::size_t> k;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<int> starts;
  std::uint64_t seed = 1;
  std::string out;
  std::string trace;
};

struct SimulateArgs {
  std::size_t n = 50;
  std::size_t p = 20;
  long long m = 100;
  std::string zero_mode = "random";
  double zero_level = 0.0;
  std::uint64_t seed = 1;
  std::string out;
};

struct CompareArgs {
  std::string input;
  std::string models = "mn,dm,rcm,nm,gdm,ddm";
  std::string k_list = "2";
  std::string out;
  std::uint64_t seed = 1;
  std::optional<int> starts;
};

struct StudyArgs {
  std::string which;
  std::optional<std::size_t> replicates;
  std::string levels;
  std::string k_list;
  std::string models;
  std::optional<std::uint64_t> seed;
  bool full_grid = false;
  std::string out;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> n;
  std::optional<std::size_t> p;
  std::optional<long long> m;
  std::string zero_mode;
  bool quiet = false;
};

int cmd_fit(const FitArgs& args);
int cmd_simulate(const SimulateArgs& args);
int cmd_compare(const CompareArgs& args);
int cmd_study(const StudyArgs& args, const std::atomic<bool>& cancel);

}  // namespace overcount::cli
