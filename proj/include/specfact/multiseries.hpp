/* multiseries.hpp — multichannel series container and CSV round trip
 *
 * A MultiSeries holds P channels observed at T time points (values is P×T,
 * channel-major), the channel names, and optionally the sampling rate in Hz
 * for mapping analysis frequencies to physical ones.  CSV layout is the
 * transpose: one row per time point, one column per channel, with an optional
 * leading header row of channel names.
 *
 * standardize() centers each channel and scales by the unbiased standard
 * deviation, the normalization assumed by the spectral model; it is the
 * identity (to rounding) on already-standardized input.
 */
#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace specfact {

// ── Container ────────────────────────────────────────────────────────────────

struct MultiSeries {
  Eigen::MatrixXd values;                  // P×T: row = channel, column = time
  std::vector<std::string> channel_names;  // size P
  std::optional<double> sample_rate_hz;    // absent when unknown

  Eigen::Index channels() const { return values.rows(); }
  Eigen::Index length() const { return values.cols(); }
};

// ── CSV parsing helpers ──────────────────────────────────────────────────────

namespace detail {

inline std::string_view trim(std::string_view field) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
    field.remove_prefix(1);
  while (!field.empty() &&
         (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  return field;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

inline double parse_value(std::string_view field, std::size_t line_no,
                          std::size_t column_no) {
  double value = 0.0;
  const auto [end, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || end != field.data() + field.size()) {
    std::ostringstream msg;
    msg << "load_csv: malformed numeric value '" << std::string(field)
        << "' at row " << line_no << ", column " << column_no;
    throw std::runtime_error(msg.str());
  }
  return value;
}

}  // namespace detail

// ── CSV I/O ──────────────────────────────────────────────────────────────────

// Reads a CSV of T rows × P columns into a P×T MultiSeries.  Row/column
// positions in error messages are 1-based file coordinates (the header line,
// when present, counts as row 1).
inline MultiSeries load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_csv: cannot open file '" + path + "'");

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    // A trailing blank line (or end-of-file newline artifact) is not data.
    std::string_view stripped = detail::trim(line);
    if (stripped.empty() && in.peek() == std::char_traits<char>::eof()) break;
    lines.push_back(line);
  }

  std::size_t line_no = 0;
  MultiSeries series;
  std::size_t expected_fields = 0;

  if (has_header) {
    if (lines.empty())
      throw std::runtime_error("load_csv: file '" + path +
                               "' has no header row");
    ++line_no;
    for (std::string_view name : detail::split_fields(lines[0]))
      series.channel_names.emplace_back(name);
    expected_fields = series.channel_names.size();
  }

  const std::size_t first_data = has_header ? 1 : 0;
  const std::size_t rows = lines.size() - first_data;
  if (rows == 0)
    throw std::runtime_error("load_csv: file '" + path + "' has no data rows");

  std::vector<std::vector<double>> data;
  data.reserve(rows);
  for (std::size_t i = first_data; i < lines.size(); ++i) {
    ++line_no;
    const auto fields = detail::split_fields(lines[i]);
    if (expected_fields == 0) expected_fields = fields.size();
    if (fields.size() != expected_fields) {
      std::ostringstream msg;
      msg << "load_csv: row " << line_no << " has " << fields.size()
          << " fields, expected " << expected_fields;
      throw std::runtime_error(msg.str());
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row[c] = detail::parse_value(fields[c], line_no, c + 1);
    data.push_back(std::move(row));
  }

  const Eigen::Index p = static_cast<Eigen::Index>(expected_fields);
  const Eigen::Index t = static_cast<Eigen::Index>(data.size());
  series.values.resize(p, t);
  for (Eigen::Index ti = 0; ti < t; ++ti)
    for (Eigen::Index pi = 0; pi < p; ++pi)
      series.values(pi, ti) = data[static_cast<std::size_t>(ti)]
                                  [static_cast<std::size_t>(pi)];

  if (series.channel_names.empty())
    for (Eigen::Index pi = 0; pi < p; ++pi)
      series.channel_names.push_back("ch" + std::to_string(pi + 1));
  if (static_cast<Eigen::Index>(series.channel_names.size()) != p)
    throw std::runtime_error(
        "load_csv: header width does not match data width");
  return series;
}

// Writes the transpose layout read by load_csv, full double precision.
inline void save_csv(const MultiSeries& series, const std::string& path,
                     bool write_header = true) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("save_csv: cannot open file '" + path +
                             "' for writing");
  const Eigen::Index p = series.channels();
  const Eigen::Index t = series.length();
  if (write_header) {
    for (Eigen::Index pi = 0; pi < p; ++pi)
      out << (pi ? "," : "") << series.channel_names[static_cast<std::size_t>(pi)];
    out << '\n';
  }
  char buffer[40];
  for (Eigen::Index ti = 0; ti < t; ++ti) {
    for (Eigen::Index pi = 0; pi < p; ++pi) {
      std::snprintf(buffer, sizeof buffer, "%.17g", series.values(pi, ti));
      out << (pi ? "," : "") << buffer;
    }
    out << '\n';
  }
  if (!out)
    throw std::runtime_error("save_csv: write to '" + path + "' failed");
}

// ── Standardization ──────────────────────────────────────────────────────────

// Centers each channel and scales by the unbiased (1/(T−1)) standard
// deviation.  A channel with zero variance cannot be standardized and raises
// an error naming it.
inline MultiSeries standardize(const MultiSeries& series) {
  const Eigen::Index p = series.channels();
  const Eigen::Index t = series.length();
  if (t < 2)
    throw std::invalid_argument(
        "standardize: at least two time points are required");
  MultiSeries out = series;
  for (Eigen::Index pi = 0; pi < p; ++pi) {
    const double mean = series.values.row(pi).mean();
    const double ss = (series.values.row(pi).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(t - 1));
    if (!(sd > 0.0))
      throw std::runtime_error(
          "standardize: channel '" +
          series.channel_names[static_cast<std::size_t>(pi)] +
          "' is constant and cannot be standardized");
    out.values.row(pi) = (series.values.row(pi).array() - mean) / sd;
  }
  return out;
}

}  // namespace specfact
