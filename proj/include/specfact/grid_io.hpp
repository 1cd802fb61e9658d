#pragma once
/*
 * Flat binary files for the two dense estimate shapes the command-line tools
 * exchange: a spectral matrix grid evaluated on explicit (u, ω) axes, and a
 * rolling-window estimate on its native block × Fourier-bin grid.  Both are
 * little-endian, doubles throughout, complex values stored re, im with each
 * P×P cell column-major:
 *
 *   SPFGRID1 | i32 p | i64 n_u | i64 n_ω | u[n_u] | ω[n_ω]
 *            | cells (u-major, frequency fastest), each 2·p² doubles
 *
 *   SPFROLL1 | i32 p | i64 t | i64 block | i64 n_blocks | i64 n_ω
 *            | centers_u[n_blocks] | ω[n_ω] | chosen_span[n_blocks] (i32)
 *            | cells (block-major, frequency fastest), each 2·p² doubles
 *
 * Readers bound every count before allocating and verify the byte length
 * implied by the header, so a truncated or mislabeled file fails loudly
 * instead of yielding a short grid.
 */

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specfact/rollwin.hpp"
#include "specfact/spectral_grid.hpp"

namespace specfact {

namespace detail {

constexpr char kGridMagic[8] = {'S', 'P', 'F', 'G', 'R', 'I', 'D', '1'};
constexpr char kRollMagic[8] = {'S', 'P', 'F', 'R', 'O', 'L', 'L', '1'};

template <class T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error(std::string("grid file truncated at ") + what);
  return value;
}

inline void write_doubles(std::ofstream& out, const double* data,
                          std::size_t n) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_doubles(std::ifstream& in, double* data, std::size_t n,
                         const char* what) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error(std::string("grid file truncated at ") + what);
}

inline void write_cells(std::ofstream& out,
                        const std::vector<Eigen::MatrixXcd>& cells) {
  for (const Eigen::MatrixXcd& cell : cells)
    write_doubles(out, reinterpret_cast<const double*>(cell.data()),
                  2 * static_cast<std::size_t>(cell.size()));
}

inline void read_cells(std::ifstream& in, std::vector<Eigen::MatrixXcd>& cells,
                       std::size_t count, int p) {
  cells.assign(count, Eigen::MatrixXcd(p, p));
  for (Eigen::MatrixXcd& cell : cells)
    read_doubles(in, reinterpret_cast<double*>(cell.data()),
                 2 * static_cast<std::size_t>(cell.size()), "cells");
}

inline void check_magic(std::ifstream& in, const char (&magic)[8],
                        const std::string& path) {
  char found[8];
  in.read(found, 8);
  if (!in || std::memcmp(found, magic, 8) != 0)
    throw std::runtime_error("'" + path +
                             "' is not a file of the expected format");
}

// Guards both dimension sanity and the multiplication overflow below.
inline void check_counts(std::int64_t a, std::int64_t b, int p,
                         const std::string& path) {
  if (a < 1 || b < 1 || p < 1 || a > (1 << 24) || b > (1 << 24) || p > (1 << 16))
    throw std::runtime_error("'" + path + "' declares implausible dimensions");
}

}  // namespace detail

inline void save_grid(const SpectralMatrixGrid& grid, const std::string& path) {
  grid.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("save_grid: cannot open '" + path + "'");
  out.write(detail::kGridMagic, 8);
  detail::write_pod<std::int32_t>(out, grid.p);
  detail::write_pod<std::int64_t>(out, grid.u.size());
  detail::write_pod<std::int64_t>(out, grid.omega.size());
  detail::write_doubles(out, grid.u.data(),
                        static_cast<std::size_t>(grid.u.size()));
  detail::write_doubles(out, grid.omega.data(),
                        static_cast<std::size_t>(grid.omega.size()));
  detail::write_cells(out, grid.cells);
  if (!out) throw std::runtime_error("save_grid: write to '" + path + "' failed");
}

inline SpectralMatrixGrid load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_grid: cannot open '" + path + "'");
  detail::check_magic(in, detail::kGridMagic, path);
  SpectralMatrixGrid grid;
  grid.p = detail::read_pod<std::int32_t>(in, "p");
  const auto n_u = detail::read_pod<std::int64_t>(in, "n_u");
  const auto n_w = detail::read_pod<std::int64_t>(in, "n_omega");
  detail::check_counts(n_u, n_w, grid.p, path);
  grid.u.resize(n_u);
  grid.omega.resize(n_w);
  detail::read_doubles(in, grid.u.data(), static_cast<std::size_t>(n_u), "u");
  detail::read_doubles(in, grid.omega.data(), static_cast<std::size_t>(n_w),
                       "omega");
  detail::read_cells(in, grid.cells,
                     static_cast<std::size_t>(n_u) * static_cast<std::size_t>(n_w),
                     grid.p);
  grid.validate();
  return grid;
}

inline void save_rolling(const RollingEstimate& est, const std::string& path) {
  if (est.cells.empty() ||
      est.cells.size() != static_cast<std::size_t>(est.blocks()) *
                              static_cast<std::size_t>(est.omega.size()) ||
      est.chosen_span.size() != static_cast<std::size_t>(est.blocks()))
    throw std::invalid_argument("save_rolling: estimate is inconsistent");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("save_rolling: cannot open '" + path + "'");
  const int p = static_cast<int>(est.cells.front().rows());
  out.write(detail::kRollMagic, 8);
  detail::write_pod<std::int32_t>(out, p);
  detail::write_pod<std::int64_t>(out, est.t);
  detail::write_pod<std::int64_t>(out, est.block);
  detail::write_pod<std::int64_t>(out, static_cast<std::int64_t>(est.blocks()));
  detail::write_pod<std::int64_t>(out, est.omega.size());
  detail::write_doubles(out, est.centers_u.data(),
                        static_cast<std::size_t>(est.centers_u.size()));
  detail::write_doubles(out, est.omega.data(),
                        static_cast<std::size_t>(est.omega.size()));
  for (const int span : est.chosen_span)
    detail::write_pod<std::int32_t>(out, span);
  detail::write_cells(out, est.cells);
  if (!out)
    throw std::runtime_error("save_rolling: write to '" + path + "' failed");
}

inline RollingEstimate load_rolling(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_rolling: cannot open '" + path + "'");
  detail::check_magic(in, detail::kRollMagic, path);
  RollingEstimate est;
  const auto p = detail::read_pod<std::int32_t>(in, "p");
  est.t = detail::read_pod<std::int64_t>(in, "t");
  est.block = detail::read_pod<std::int64_t>(in, "block");
  const auto n_blocks = detail::read_pod<std::int64_t>(in, "n_blocks");
  const auto n_w = detail::read_pod<std::int64_t>(in, "n_omega");
  detail::check_counts(n_blocks, n_w, p, path);
  est.centers_u.resize(n_blocks);
  est.omega.resize(n_w);
  detail::read_doubles(in, est.centers_u.data(),
                       static_cast<std::size_t>(n_blocks), "centers_u");
  detail::read_doubles(in, est.omega.data(), static_cast<std::size_t>(n_w),
                       "omega");
  est.chosen_span.resize(static_cast<std::size_t>(n_blocks));
  for (int& span : est.chosen_span)
    span = detail::read_pod<std::int32_t>(in, "chosen_span");
  detail::read_cells(in, est.cells,
                     static_cast<std::size_t>(n_blocks) *
                         static_cast<std::size_t>(n_w),
                     p);
  return est;
}

// Peeks at a file's 8-byte tag; empty string when it matches neither format
// nor the chain archive.
inline std::string binary_format_of(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char found[8];
  in.read(found, 8);
  if (!in) return {};
  if (std::memcmp(found, detail::kGridMagic, 8) == 0) return "grid";
  if (std::memcmp(found, detail::kRollMagic, 8) == 0) return "rolling";
  if (std::memcmp(found, "SPFCHAIN", 8) == 0) return "chain";
  return {};
}

}  // namespace specfact
