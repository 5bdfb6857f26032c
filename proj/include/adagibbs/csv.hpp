#pragma once

// CSV formats written by the CLI and experiments.
//
//   trace:       cycle,seconds,summary
//   report:      m,tau_int,ess,sigma2,epsr,objective   (absent values empty)
//   adaptation:  m,w_z,w_theta,tau_int,objective, one row per arm, then the
//                footer row "m_star,<m>"
//   metrics:     metric,value,iteration,chain
//
// Numbers use 17 significant digits. Columns holding wall-clock quantities
// (see kTimingColumns) are the only ones allowed to differ between two runs
// with the same seed; mask_timing_columns blanks them for comparison.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adagibbs/adapt.hpp"
#include "adagibbs/data.hpp"
#include "adagibbs/diagnostics.hpp"
#include "adagibbs/error.hpp"
#include "adagibbs/scan.hpp"

namespace adagibbs {

inline constexpr std::array<std::string_view, 4> kTimingColumns = {"seconds", "w_z", "w_theta", "objective"};
/// Footer keys whose value is derived from wall-clock measurements.
inline constexpr std::array<std::string_view, 1> kTimingFooters = {"m_star"};

namespace detail {

inline std::string fmt(double v) { return format_double(v); }
inline std::string fmt(std::optional<double> v) { return v ? format_double(*v) : std::string(); }

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool is_timing_column(std::string_view name) {
  return std::find(kTimingColumns.begin(), kTimingColumns.end(), name) != kTimingColumns.end();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Writers

inline void write_trace(std::ostream& out, const ChainTrace& trace) {
  out << "cycle,seconds,summary\n";
  for (const auto& p : trace.points) out << p.cycle << ',' << detail::fmt(p.seconds) << ',' << detail::fmt(p.summary) << '\n';
}

inline void write_trace(const std::filesystem::path& path, const ChainTrace& trace) {
  auto out = detail::open_for_write(path);
  write_trace(out, trace);
}

inline void write_reports(std::ostream& out, const std::vector<DiagnosticsReport>& reports) {
  out << "m,tau_int,ess,sigma2,epsr,objective\n";
  for (const auto& r : reports)
    out << r.batch_size << ',' << detail::fmt(r.tau_int) << ',' << detail::fmt(r.ess) << ',' << detail::fmt(r.sigma2)
        << ',' << detail::fmt(r.epsr) << ',' << detail::fmt(r.objective) << '\n';
}

inline void write_reports(const std::filesystem::path& path, const std::vector<DiagnosticsReport>& reports) {
  auto out = detail::open_for_write(path);
  write_reports(out, reports);
}

inline void write_adaptation(std::ostream& out, const AdaptationResult& r) {
  out << "m,w_z,w_theta,tau_int,objective\n";
  for (const auto& a : r.per_arm)
    out << a.m << ',' << detail::fmt(a.w_z) << ',' << detail::fmt(a.w_theta) << ',' << detail::fmt(a.tau_int) << ','
        << detail::fmt(a.objective) << '\n';
  out << "m_star," << r.m_star << '\n';
}

inline void write_adaptation(const std::filesystem::path& path, const AdaptationResult& r) {
  auto out = detail::open_for_write(path);
  write_adaptation(out, r);
}

struct MetricRow {
  std::string metric;
  double value = 0.0;
  std::size_t iteration = 0;
  std::size_t chain = 0;
};

inline void write_metrics(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "metric,value,iteration,chain\n";
  for (const auto& r : rows) out << r.metric << ',' << detail::fmt(r.value) << ',' << r.iteration << ',' << r.chain << '\n';
}

inline void write_metrics(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  auto out = detail::open_for_write(path);
  write_metrics(out, rows);
}

// ---------------------------------------------------------------------------
// Reading

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based line of each row
  std::vector<std::pair<std::string, std::string>> footer;

  std::size_t column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }

  std::vector<double> numeric_column(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = detail::parse_numbers(rows[r][c], source + ":" + std::to_string(row_lines[r]));
      if (v.size() != 1)
        throw DataError(source + ":" + std::to_string(row_lines[r]) + ": expected one number in column '" +
                        std::string(name) + "'");
      out.push_back(v[0]);
    }
    return out;
  }

  std::optional<std::string> footer_value(std::string_view key) const {
    for (const auto& [k, v] : footer)
      if (k == key) return v;
    return std::nullopt;
  }
};

/// Parses a header line and rows of the same width. Two-field rows whose
/// first field starts with a letter, after the body, are footer entries.
inline CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    auto fields = detail::split_fields(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (t.header.empty()) {
      for (const auto& f : fields)
        if (f.empty()) throw DataError(where + ": empty column name in header");
      t.header = std::move(fields);
      continue;
    }
    const bool footer_like = fields.size() == 2 && !fields[0].empty() && std::isalpha(static_cast<unsigned char>(fields[0][0]));
    if (footer_like && fields.size() != t.header.size()) {
      t.footer.emplace_back(fields[0], fields[1]);
      continue;
    }
    if (!t.footer.empty()) throw DataError(where + ": data row after footer");
    if (fields.size() != t.header.size())
      throw DataError(where + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.row_lines.push_back(line_no);
  }
  if (t.header.empty()) throw DataError(source + ": empty CSV");
  return t;
}

inline CsvTable load_csv(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  return parse_csv(in, path.string());
}

inline ChainTrace load_trace(const std::filesystem::path& path) {
  const CsvTable t = load_csv(path);
  const auto cycles = t.numeric_column("cycle");
  const auto seconds = t.numeric_column("seconds");
  const auto summary = t.numeric_column("summary");
  if (t.rows.empty()) throw DataError(path.string() + ": trace has no rows");
  ChainTrace trace;
  for (std::size_t i = 0; i < cycles.size(); ++i)
    trace.points.push_back({static_cast<std::size_t>(cycles[i]), seconds[i], summary[i]});
  return trace;
}

// ---------------------------------------------------------------------------
// Comparison

/// Replaces every field of a timing column, and the value of every timing
/// footer row, by "*". Text that has no CSV header is returned unchanged.
inline std::string mask_timing_columns(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::ostringstream out;
  std::string line;
  std::vector<bool> mask;
  bool have_header = false;
  while (std::getline(in, line)) {
    auto fields = detail::split_fields(line);
    if (!have_header) {
      have_header = true;
      for (const auto& f : fields) mask.push_back(detail::is_timing_column(f));
    } else if (fields.size() == mask.size()) {
      for (std::size_t i = 0; i < fields.size(); ++i)
        if (mask[i]) fields[i] = "*";
    } else if (fields.size() == 2 &&
               std::find(kTimingFooters.begin(), kTimingFooters.end(), fields[0]) != kTimingFooters.end()) {
      fields[1] = "*";
    }
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace adagibbs
