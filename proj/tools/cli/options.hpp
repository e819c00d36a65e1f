#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace overcount::cli {

enum Exit : int {
  kOk = 0,
  kInputError = 1,
  kNotConverged = 2,
  kInterrupted = 130,
};

/// "1,2,5", "1..5" or a mix such as "1..3,8". Throws InputError.
std::vector<std::size_t> parse_k_list(std::string_view text);

/// "0,0.1,0.5" or "0..0.9" (step 0.1). Throws InputError.
std::vector<double> parse_levels(std::string_view text);

/// Comma-separated, empty items removed.
std::vector<std::string> split_list(std::string_view text);

/// --jobs when given, else OVERCOUNT_JOBS, else 1. Throws InputError on a
/// malformed environment value.
std::size_t resolve_jobs(std::optional<std::size_t> flag);

std::string format_number(double x);

}  // namespace overcount::cli
