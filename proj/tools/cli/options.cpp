#include "options.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "overcount/errors.hpp"

namespace overcount::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::size_t to_size(std::string_view s, std::string_view what) {
  s = trim(s);
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw InputError(std::string(what) + ": '" + std::string(s) + "' is not a nonnegative integer");
  }
  return v;
}

double to_double(std::string_view s, std::string_view what) {
  const std::string str(trim(s));
  char* end = nullptr;
  const double v = std::strtod(str.c_str(), &end);
  if (str.empty() || end != str.c_str() + str.size() || !std::isfinite(v)) {
    throw InputError(std::string(what) + ": '" + str + "' is not a number");
  }
  return v;
}

}  // namespace

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos
                                                                              : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::size_t> parse_k_list(std::string_view text) {
  std::vector<std::size_t> ks;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      ks.push_back(to_size(item, "--k-list"));
      continue;
    }
    const std::size_t lo = to_size(std::string_view(item).substr(0, dots), "--k-list");
    const std::size_t hi = to_size(std::string_view(item).substr(dots + 2), "--k-list");
    if (hi < lo) throw InputError("--k-list: empty range '" + item + "'");
    for (std::size_t k = lo; k <= hi; ++k) ks.push_back(k);
  }
  if (ks.empty()) throw InputError("--k-list: no values");
  for (std::size_t k : ks) {
    if (k < 1) throw InputError("--k-list: K must be >= 1");
  }
  return ks;
}

std::vector<double> parse_levels(std::string_view text) {
  std::vector<double> levels;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      levels.push_back(to_double(item, "--levels"));
      continue;
    }
    const double lo = to_double(std::string_view(item).substr(0, dots), "--levels");
    const double hi = to_double(std::string_view(item).substr(dots + 2), "--levels");
    if (hi < lo) throw InputError("--levels: empty range '" + item + "'");
    const long first = std::lround(lo * 10.0);
    const long last = std::lround(hi * 10.0);
    for (long t = first; t <= last; ++t) levels.push_back(static_cast<double>(t) / 10.0);
  }
  if (levels.empty()) throw InputError("--levels: no values");
  for (double l : levels) {
    if (!(l >= 0.0 && l < 1.0)) throw InputError("--levels: zero level must lie in [0, 1)");
  }
  return levels;
}

std::size_t resolve_jobs(std::optional<std::size_t> flag) {
  if (flag) return *flag;
  const char* env = std::getenv("OVERCOUNT_JOBS");
  if (env == nullptr || *env == '\0') return 1;
  return to_size(env, "OVERCOUNT_JOBS");
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace overcount::cli
