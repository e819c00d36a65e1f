#include "overcount/counts.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include "overcount/errors.hpp"

namespace overcount {

count_t total(std::span<const count_t> y) {
  return std::accumulate(y.begin(), y.end(), count_t{0});
}

CountMatrix::CountMatrix(std::size_t n, std::size_t p) : n_(n), p_(p), cells_(n * p, 0) {
  if (p < 2) throw InputError("count matrix needs at least 2 categories");
}

CountMatrix CountMatrix::from_rows(const std::vector<std::vector<count_t>>& rows) {
  if (rows.empty()) throw InputError("count matrix needs at least one row");
  CountMatrix out(0, rows.front().size());
  for (const auto& r : rows) out.append_row(r);
  return out;
}

std::vector<count_t> CountMatrix::row_totals() const {
  std::vector<count_t> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = row_total(i);
  return out;
}

std::size_t CountMatrix::zero_cells() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), count_t{0}));
}

void CountMatrix::append_row(std::span<const count_t> y) {
  if (y.size() != p_) {
    throw InputError("row has " + std::to_string(y.size()) + " columns, expected " +
                     std::to_string(p_));
  }
  for (count_t v : y) {
    if (v < 0) throw InputError("negative count " + std::to_string(v));
  }
  cells_.insert(cells_.end(), y.begin(), y.end());
  ++n_;
}

CountMatrix CountMatrix::without_empty_rows(std::size_t* dropped) const {
  CountMatrix out(0, p_);
  std::size_t removed = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (row_total(i) == 0) {
      ++removed;
    } else {
      out.append_row(row(i));
    }
  }
  if (dropped) *dropped = removed;
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_integer(std::string_view s, count_t& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

bool looks_numeric(std::string_view s) {
  if (s.empty()) return false;
  const char c = s.front();
  return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
}

}  // namespace

CountMatrix read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t p = 0;
  std::vector<count_t> buf;
  CountMatrix out;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto fields = split(view);
    if (first_content) {
      first_content = false;
      if (!looks_numeric(fields.front())) continue;  // header
    }
    if (p == 0) {
      p = fields.size();
      if (p < 2) {
        throw InputError("line " + std::to_string(line_no) +
                         ": need at least 2 columns, found " + std::to_string(p));
      }
      out = CountMatrix(0, p);
    }
    if (fields.size() != p) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(p) +
                       " columns, found " + std::to_string(fields.size()));
    }
    buf.assign(p, 0);
    for (std::size_t j = 0; j < p; ++j) {
      if (!parse_integer(fields[j], buf[j])) {
        throw InputError("line " + std::to_string(line_no) + ", column " +
                         std::to_string(j + 1) + ": not an integer: '" +
                         std::string(fields[j]) + "'");
      }
      if (buf[j] < 0) {
        throw InputError("line " + std::to_string(line_no) + ", column " +
                         std::to_string(j + 1) + ": negative count " + std::to_string(buf[j]));
      }
    }
    out.append_row(buf);
  }
  if (out.rows() == 0) throw InputError("no data rows found");
  return out;
}

CountMatrix read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, const CountMatrix& data, bool header) {
  if (header) {
    for (std::size_t j = 0; j < data.cols(); ++j) out << (j ? ",y" : "y") << (j + 1);
    out << '\n';
  }
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto r = data.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out << ',';
      out << r[j];
    }
    out << '\n';
  }
}

std::string to_csv(const CountMatrix& data, bool header) {
  std::ostringstream os;
  write_csv(os, data, header);
  return os.str();
}

}  // namespace overcount
