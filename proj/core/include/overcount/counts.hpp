#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace overcount {

using count_t = std::int64_t;

/// One observation: per-category counts and their total (the size m).
struct CountVector {
  std::span<const count_t> y;
  count_t m = 0;
};

count_t total(std::span<const count_t> y);

/// n x p matrix of nonnegative counts, row-major. Rows may have different
/// totals; every row has the same number of categories p >= 2.
class CountMatrix {
 public:
  CountMatrix() = default;
  CountMatrix(std::size_t n, std::size_t p);

  static CountMatrix from_rows(const std::vector<std::vector<count_t>>& rows);

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return p_; }
  bool empty() const { return n_ == 0; }

  count_t& operator()(std::size_t i, std::size_t j) { return cells_[i * p_ + j]; }
  count_t operator()(std::size_t i, std::size_t j) const { return cells_[i * p_ + j]; }

  std::span<const count_t> row(std::size_t i) const {
    return {cells_.data() + i * p_, p_};
  }
  std::span<count_t> row(std::size_t i) { return {cells_.data() + i * p_, p_}; }

  CountVector observation(std::size_t i) const { return {row(i), total(row(i))}; }
  count_t row_total(std::size_t i) const { return total(row(i)); }
  std::vector<count_t> row_totals() const;

  std::span<const count_t> cells() const { return cells_; }
  std::span<count_t> cells() { return cells_; }

  std::size_t zero_cells() const;

  void append_row(std::span<const count_t> y);

  /// Copy with all-zero rows removed; the number removed goes to *dropped.
  CountMatrix without_empty_rows(std::size_t* dropped = nullptr) const;

  bool operator==(const CountMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<count_t> cells_;
};

/// Reads comma-separated integer rows. A first line that does not parse as
/// numbers is treated as a header. Throws InputError with the offending line
/// number on malformed cells, negative counts, ragged rows or p < 2.
CountMatrix read_csv(std::istream& in);
CountMatrix read_csv_file(const std::filesystem::path& path);

/// Writes one row per observation with a "y1,...,yp" header.
void write_csv(std::ostream& out, const CountMatrix& data, bool header = true);
std::string to_csv(const CountMatrix& data, bool header = true);

}  // namespace overcount
