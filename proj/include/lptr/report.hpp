#pragma once

// Benchmark result rows and their CSV / markdown rendering.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lptr/errors.hpp"

namespace lptr {

struct ReportRow {
  std::string alg;
  double F = 0.0;
  std::int64_t iter = 0;
  double eps_K = 0.0;
  double dF = 0.0;
  double h_K = 0.0;
  std::optional<double> h_K_nc;  // absent for H01 runs
  double sparsity = 0.0;
  std::int64_t feval = 0;
  std::int64_t hess = 0;
  std::int64_t prox_lp = 0;
  double time_s = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

enum class ReportFormat { Csv, Markdown };

inline constexpr std::string_view kCsvHeader = "alg,F,iter,eps_K,dF,h_K,h_K_nc,sparsity,feval,hess,prox_lp,time_s";

/// Shortest decimal string that parses back to exactly x.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ContractViolation("lptr: not a number: '" + std::string(s) + "'");
  return x;
}

inline std::int64_t parse_count(std::string_view s) {
  std::int64_t x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || x < 0)
    throw ContractViolation("lptr: not a count: '" + std::string(s) + "'");
  return x;
}

namespace detail {

inline std::vector<std::string> row_fields(const ReportRow& r) {
  return {r.alg,
          format_number(r.F),
          std::to_string(r.iter),
          format_number(r.eps_K),
          format_number(r.dF),
          format_number(r.h_K),
          r.h_K_nc ? format_number(*r.h_K_nc) : std::string(),
          format_number(r.sparsity),
          std::to_string(r.feval),
          std::to_string(r.hess),
          std::to_string(r.prox_lp),
          format_number(r.time_s)};
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format) {
  LPTR_REQUIRE(!rows.empty(), "report needs at least one row");
  std::ostringstream os;
  const auto header = detail::split(kCsvHeader, ',');
  if (format == ReportFormat::Csv) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
      LPTR_REQUIRE(r.alg.find_first_of(",\n\"") == std::string::npos, "algorithm name must not need quoting");
      const auto f = detail::row_fields(r);
      for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
      os << '\n';
    }
    return os.str();
  }
  os << '|';
  for (auto h : header) os << ' ' << h << " |";
  os << "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) os << (i == 0 ? "---|" : "---:|");
  os << '\n';
  for (const auto& r : rows) {
    os << '|';
    for (const auto& f : detail::row_fields(r)) os << ' ' << (f.empty() ? "-" : f) << " |";
    os << '\n';
  }
  return os.str();
}

/// Inverse of emit_report(rows, Csv).
inline std::vector<ReportRow> parse_csv(std::string_view text) {
  std::vector<ReportRow> rows;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw ContractViolation("lptr: unexpected CSV header");
      header_seen = true;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 12) throw ContractViolation("lptr: CSV row must have 12 fields");
    ReportRow r;
    r.alg = std::string(f[0]);
    r.F = parse_number(f[1]);
    r.iter = parse_count(f[2]);
    r.eps_K = parse_number(f[3]);
    r.dF = parse_number(f[4]);
    r.h_K = parse_number(f[5]);
    if (!f[6].empty()) r.h_K_nc = parse_number(f[6]);
    r.sparsity = parse_number(f[7]);
    r.feval = parse_count(f[8]);
    r.hess = parse_count(f[9]);
    r.prox_lp = parse_count(f[10]);
    r.time_s = parse_number(f[11]);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw ContractViolation("lptr: empty CSV");
  return rows;
}

}  // namespace lptr
