/* rollwin.hpp — rolling-window smoothed-periodogram estimator
 *
 * The comparison baseline: the series is cut into overlapping blocks
 * (50% overlap by default), each block yields rank-one periodogram matrices
 * on its own Fourier grid, and the periodograms are smoothed in frequency by
 * a running mean whose span is chosen per block by generalized
 * cross-validation,
 *
 *   GCV(m) = (1/K) Σ_k ‖I(ω_k) − f̂_m(ω_k)‖²_F / (1 − 1/m)²,
 *
 * over a candidate set of odd spans.  Smoothing runs on the full two-sided
 * circular frequency grid, which is equivalent to reflecting indices at the
 * edges with conjugation (I(−ω) = conj I(ω)) and keeps the estimates
 * Hermitian, and positive semidefinite whenever the span is at least the
 * channel count.  Block estimates sit at block-center times; evaluation
 * anywhere interpolates bilinearly in time and frequency, extrapolating as
 * constant beyond the first and last block centers.
 */
#pragma once

#include "specfact/spectral.hpp"
#include "specfact/spectral_grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace specfact {

// ── Configuration ────────────────────────────────────────────────────────────

struct RollConfig {
  std::int64_t block = 256;  // window length B, even
  double overlap = 0.5;      // fraction shared by consecutive blocks
  std::vector<int> spans;    // odd candidate spans; empty → default set
  bool taper = false;        // Hann-taper blocks before the DFT

  void validate(std::int64_t total_length) const {
    if (block < 8 || block % 2 != 0)
      throw std::invalid_argument("RollConfig: block must be even and ≥ 8");
    if (block > total_length)
      throw std::invalid_argument(
          "RollConfig: block exceeds the series length");
    if (!(overlap >= 0.0 && overlap < 1.0))
      throw std::invalid_argument("RollConfig: overlap must lie in [0, 1)");
    for (int m : spans)
      if (m < 1 || m % 2 == 0)
        throw std::invalid_argument(
            "RollConfig: smoothing spans must be odd positive integers");
  }
};

namespace detail {

// Block start offsets: a regular stride, plus a tail block flush with the
// end when the stride does not land there.
inline std::vector<std::int64_t> block_starts(std::int64_t total_length,
                                              std::int64_t block,
                                              double overlap) {
  const std::int64_t stride = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::llround(static_cast<double>(block) * (1.0 - overlap))));
  std::vector<std::int64_t> starts;
  for (std::int64_t s = 0; s + block <= total_length; s += stride)
    starts.push_back(s);
  if (starts.back() + block < total_length)
    starts.push_back(total_length - block);
  return starts;
}

// Default candidate spans: odd numbers from just above the channel count in
// steps of eight, capped at max(K/4, first) and never beyond K = B/2.
inline std::vector<int> default_spans(int p, std::int64_t block) {
  const int k = static_cast<int>(block / 2);
  const int first = (p + 1) % 2 == 1 ? p + 1 : p + 2;
  const int cap = std::min(k, std::max(k / 4, first));
  std::vector<int> spans;
  for (int m = first; m <= cap; m += 8) spans.push_back(m);
  return spans;
}

}  // namespace detail

// ── Estimate container ───────────────────────────────────────────────────────

struct RollingEstimate {
  std::int64_t t = 0;      // series length
  std::int64_t block = 0;  // window length
  Eigen::VectorXd centers_u;        // block centers as rescaled times
  Eigen::VectorXd omega;            // block Fourier grid k/B, k = 0..B/2
  std::vector<int> chosen_span;     // GCV winner per block
  std::vector<Eigen::MatrixXcd> cells;  // block-major, frequency fastest

  int blocks() const { return static_cast<int>(centers_u.size()); }

  Eigen::MatrixXcd& at(int ib, Eigen::Index iw) {
    return cells[static_cast<std::size_t>(ib * omega.size() + iw)];
  }
  const Eigen::MatrixXcd& at(int ib, Eigen::Index iw) const {
    return cells[static_cast<std::size_t>(ib * omega.size() + iw)];
  }

  // Bilinear interpolation in (time, frequency); constant beyond the first
  // and last block centers.  ω must lie in [0, 1/2], which the block grid
  // covers end to end.
  Eigen::MatrixXcd at_point(double u, double omega_freq) const {
    if (!(omega_freq >= 0.0 && omega_freq <= 0.5))
      throw std::invalid_argument(
          "RollingEstimate: frequency must lie in [0, 1/2]");
    const Eigen::Index k_max = omega.size() - 1;
    double x = omega_freq * static_cast<double>(block);
    x = std::min(x, static_cast<double>(k_max));
    const Eigen::Index j0 =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(x), k_max - 1);
    const double fw = x - static_cast<double>(j0);

    auto freq_lerp = [&](int ib) {
      return (1.0 - fw) * at(ib, j0) + fw * at(ib, j0 + 1);
    };
    const int nb = blocks();
    if (u <= centers_u(0) || nb == 1) return freq_lerp(0);
    if (u >= centers_u(nb - 1)) return freq_lerp(nb - 1);
    int i = 0;
    while (i + 2 < nb && u > centers_u(i + 1)) ++i;
    const double tw =
        (u - centers_u(i)) / (centers_u(i + 1) - centers_u(i));
    return ((1.0 - tw) * freq_lerp(i) + tw * freq_lerp(i + 1)).eval();
  }

  SpectralMatrixGrid to_grid(Eigen::VectorXd u_points,
                             Eigen::VectorXd omega_points) const {
    const int p = cells.empty() ? 0 : static_cast<int>(cells[0].rows());
    SpectralMatrixGrid grid =
        SpectralMatrixGrid::zeros(std::move(u_points), std::move(omega_points),
                                  p);
    for (Eigen::Index iu = 0; iu < grid.u.size(); ++iu)
      for (Eigen::Index iw = 0; iw < grid.omega.size(); ++iw)
        grid.at(iu, iw) = at_point(grid.u(iu), grid.omega(iw));
    return grid;
  }
};

// ── Estimator ────────────────────────────────────────────────────────────────

inline RollingEstimate rolling_window_estimate(const Eigen::MatrixXd& values,
                                               const RollConfig& cfg) {
  const std::int64_t total_length = values.cols();
  const int p = static_cast<int>(values.rows());
  cfg.validate(total_length);
  const std::int64_t b = cfg.block;
  const int k_one_sided = static_cast<int>(b / 2);  // grid 0..K inclusive

  std::vector<int> spans =
      cfg.spans.empty() ? detail::default_spans(p, b) : cfg.spans;
  spans.erase(std::remove_if(spans.begin(), spans.end(),
                             [&](int m) { return m > k_one_sided; }),
              spans.end());
  std::sort(spans.begin(), spans.end());
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
  if (spans.empty())
    throw std::runtime_error(
        "rolling_window_estimate: no feasible smoothing span for this block "
        "length; need an odd span ≤ block/2 (is the channel count too large "
        "for the block?)");

  const std::vector<std::int64_t> starts =
      detail::block_starts(total_length, b, cfg.overlap);
  const int nb = static_cast<int>(starts.size());

  RollingEstimate out;
  out.t = total_length;
  out.block = b;
  out.centers_u.resize(nb);
  out.omega.resize(k_one_sided + 1);
  for (int k = 0; k <= k_one_sided; ++k)
    out.omega(k) = static_cast<double>(k) / static_cast<double>(b);
  out.chosen_span.resize(static_cast<std::size_t>(nb));
  out.cells.assign(static_cast<std::size_t>(nb) * (k_one_sided + 1),
                   Eigen::MatrixXcd::Zero(p, p));

  // Hann taper weights, normalized so white noise keeps its spectral level.
  Eigen::VectorXd taper_w;
  if (cfg.taper) {
    taper_w.resize(b);
    for (std::int64_t n = 0; n < b; ++n)
      taper_w(n) = 0.5 * (1.0 - std::cos(2.0 * M_PI *
                                         (static_cast<double>(n) + 0.5) /
                                         static_cast<double>(b)));
    taper_w *= std::sqrt(static_cast<double>(b) / taper_w.squaredNorm());
  }

  std::vector<Eigen::MatrixXcd> periodogram(static_cast<std::size_t>(b));
  std::vector<Eigen::MatrixXcd> prefix(static_cast<std::size_t>(b) + 1);
  std::vector<Eigen::MatrixXcd> smoothed(static_cast<std::size_t>(b));

  for (int ib = 0; ib < nb; ++ib) {
    const std::int64_t s = starts[static_cast<std::size_t>(ib)];
    out.centers_u(ib) =
        (static_cast<double>(s) + (static_cast<double>(b) + 1.0) / 2.0) /
        static_cast<double>(total_length);

    Eigen::MatrixXcd dft;
    if (cfg.taper) {
      const Eigen::MatrixXd windowed =
          values.middleCols(s, b).array().rowwise() *
          taper_w.transpose().array();
      dft = full_dft(windowed, 0, b);
    } else {
      dft = full_dft(values, s, s + b);
    }

    // Two-sided rank-one periodograms and their running prefix sums.
    prefix[0] = Eigen::MatrixXcd::Zero(p, p);
    for (std::int64_t k = 0; k < b; ++k) {
      periodogram[static_cast<std::size_t>(k)] =
          dft.row(k).transpose() * dft.row(k).conjugate();
      prefix[static_cast<std::size_t>(k) + 1] =
          prefix[static_cast<std::size_t>(k)] +
          periodogram[static_cast<std::size_t>(k)];
    }
    const Eigen::MatrixXcd& total = prefix[static_cast<std::size_t>(b)];
    // Circular window sum over k − h .. k + h.
    auto window_sum = [&](std::int64_t k, std::int64_t h) {
      std::int64_t lo = k - h, hi = k + h;  // inclusive
      Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(p, p);
      auto add_range = [&](std::int64_t a, std::int64_t z) {  // [a, z] ⊂ [0,b)
        if (a > z) return;
        sum += prefix[static_cast<std::size_t>(z) + 1] -
               prefix[static_cast<std::size_t>(a)];
      };
      if (hi - lo + 1 >= b) {
        sum = total;
      } else {
        const std::int64_t lo_m = ((lo % b) + b) % b;
        const std::int64_t hi_m = ((hi % b) + b) % b;
        if (lo_m <= hi_m) {
          add_range(lo_m, hi_m);
        } else {
          add_range(lo_m, b - 1);
          add_range(0, hi_m);
        }
      }
      return sum;
    };

    double best_score = std::numeric_limits<double>::infinity();
    int best_span = spans.front();
    for (int m : spans) {
      const std::int64_t h = (m - 1) / 2;
      for (std::int64_t k = 0; k <= k_one_sided; ++k)
        smoothed[static_cast<std::size_t>(k)] =
            window_sum(k, h) / static_cast<double>(m);
      if (spans.size() == 1) break;
      if (m == 1) continue;  // zero residual over zero penalty: never wins
      double residual = 0.0;
      for (std::int64_t k = 0; k <= k_one_sided; ++k)
        residual += (periodogram[static_cast<std::size_t>(k)] -
                     smoothed[static_cast<std::size_t>(k)])
                        .squaredNorm();
      const double shrink = 1.0 - 1.0 / static_cast<double>(m);
      const double score = residual /
                           static_cast<double>(k_one_sided + 1) /
                           (shrink * shrink);
      if (score < best_score) {
        best_score = score;
        best_span = m;
      }
    }
    // Recompute the winner (the scratch buffer holds the last candidate).
    const std::int64_t h = (best_span - 1) / 2;
    for (std::int64_t k = 0; k <= k_one_sided; ++k)
      out.at(ib, k) = window_sum(k, h) / static_cast<double>(best_span);
    out.chosen_span[static_cast<std::size_t>(ib)] = best_span;
  }
  return out;
}

}  // namespace specfact
