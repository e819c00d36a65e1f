#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "overcount/fit.hpp"
#include "overcount/params.hpp"

namespace overcount {

/// {"schema": 1, "family": "dm", "params": {...}} with fields pi, theta,
/// rho, beta, alpha (rows per component) and w as applicable.
std::string params_to_json(const FamilyParams& params, int indent = 2);
/// Throws InputError on malformed documents or unsupported schema versions.
FamilyParams params_from_json(std::string_view text);

/// FitResult with its parameters, criteria and trace; "schema": 1.
std::string fit_result_to_json(const FitResult& result, int indent = 2);
FitResult fit_result_from_json(std::string_view text);

/// iteration,loglik rows, iteration starting at 0.
void write_trace_csv(const FitResult& result, std::ostream& out);

/// Writes to a temporary file in the same directory and renames it over the
/// target, so readers never observe a truncated file. Throws
/// std::runtime_error on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace overcount
