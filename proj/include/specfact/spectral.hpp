/* spectral.hpp — local Fourier statistics, Whittle likelihood, spectra
 *
 * Frequencies are measured in cycles per sample throughout, so a spectral
 * density lives on ω ∈ [0, ½] and f(ω) = Σ_h γ(h) e^{−2πihω} for a
 * stationary covariance sequence γ.
 *
 * The local discrete Fourier transform of segment ℓ = (a, b], T_ℓ = b − a,
 * keeps the absolute time index in the phase:
 *
 *   Y_kℓ = T_ℓ^{−1/2} Σ_{t=a+1}^{b} X_t e^{−2πi ω_kℓ t},   ω_kℓ = k / T_ℓ,
 *
 * for k = 1, …, K_ℓ = ⌊(T_ℓ−1)/2⌋.  The FFT path transforms the segment in
 * local time and restores the phase with e^{−2πik(a+1)/T_ℓ}.
 *
 * The Whittle log-likelihood of a factor spectrum Λ_k Λ_k* + diag(σ²) given
 * factors D_k sums, over frequencies and channels,
 *   −½ log σ²_p − |Y_kp − (Λ_k D_k)_p|² / σ²_p .
 */
#pragma once

#include <unsupported/Eigen/FFT>

#include "specfact/partition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace specfact {

// ── Fourier frequencies ──────────────────────────────────────────────────────

struct FourierGrid {
  int count = 0;          // K = ⌊(T_seg−1)/2⌋
  Eigen::VectorXd omega;  // ω_k = k / T_seg, k = 1..K
};

inline FourierGrid fourier_frequencies(std::int64_t segment_length) {
  if (segment_length < 2)
    throw std::invalid_argument(
        "fourier_frequencies: segment length must be at least 2");
  FourierGrid grid;
  grid.count = static_cast<int>((segment_length - 1) / 2);
  grid.omega.resize(grid.count);
  for (int k = 1; k <= grid.count; ++k)
    grid.omega(k - 1) =
        static_cast<double>(k) / static_cast<double>(segment_length);
  return grid;
}

// ── Local DFT ────────────────────────────────────────────────────────────────

struct SegmentDft {
  Eigen::MatrixXcd y;     // K×P, row k = Y_k over channels
  Eigen::VectorXd omega;  // K local Fourier frequencies
};

// Direct evaluation of the defining sum; O(T_ℓ K P), used as the oracle for
// the FFT path and for very short segments.
inline SegmentDft local_dft_naive(const Eigen::MatrixXd& values,
                                  std::int64_t start, std::int64_t end) {
  const std::int64_t t_seg = end - start;
  const FourierGrid grid = fourier_frequencies(t_seg);
  const Eigen::Index p = values.rows();
  SegmentDft out;
  out.omega = grid.omega;
  out.y = Eigen::MatrixXcd::Zero(grid.count, p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(t_seg));
  for (int k = 1; k <= grid.count; ++k) {
    const double omega_k = grid.omega(k - 1);
    for (std::int64_t t = start + 1; t <= end; ++t) {
      const double phase = -2.0 * std::numbers::pi * omega_k *
                           static_cast<double>(t);
      const std::complex<double> w(std::cos(phase), std::sin(phase));
      for (Eigen::Index pi = 0; pi < p; ++pi)
        out.y(k - 1, pi) += values(pi, t - 1) * w;
    }
  }
  out.y *= scale;
  return out;
}

// FFT evaluation with the absolute-time phase restored.
inline SegmentDft local_dft_segment(const Eigen::MatrixXd& values,
                                    std::int64_t start, std::int64_t end) {
  const std::int64_t t_seg = end - start;
  const FourierGrid grid = fourier_frequencies(t_seg);
  const Eigen::Index p = values.rows();
  SegmentDft out;
  out.omega = grid.omega;
  out.y.resize(grid.count, p);

  Eigen::FFT<double> fft;
  std::vector<double> in(static_cast<std::size_t>(t_seg));
  std::vector<std::complex<double>> spectrum;
  const double scale = 1.0 / std::sqrt(static_cast<double>(t_seg));
  for (Eigen::Index pi = 0; pi < p; ++pi) {
    for (std::int64_t m = 0; m < t_seg; ++m)
      in[static_cast<std::size_t>(m)] = values(pi, start + m);
    fft.fwd(spectrum, in);
    for (int k = 1; k <= grid.count; ++k) {
      // FFT runs over local time n = 0..T_ℓ−1, i.e. absolute t = start+1+n;
      // the phase factor shifts it back to the absolute-time convention.
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) *
                           static_cast<double>(start + 1) /
                           static_cast<double>(t_seg);
      const std::complex<double> shift(std::cos(phase), std::sin(phase));
      out.y(k - 1, pi) = scale * shift * spectrum[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

// Local DFTs of every segment of a partition.
inline std::vector<SegmentDft> local_dft(const Eigen::MatrixXd& values,
                                         const Partition& partition) {
  if (partition.length() != values.cols())
    throw std::invalid_argument(
        "local_dft: partition length does not match the series length");
  std::vector<SegmentDft> out;
  out.reserve(static_cast<std::size_t>(partition.segments()));
  for (int l = 0; l < partition.segments(); ++l)
    out.push_back(local_dft_segment(values, partition.segment_start(l),
                                    partition.segment_end(l)));
  return out;
}

// Full two-sided unitary DFT (k = 0..T−1) with the same absolute-time phase;
// satisfies Parseval: Σ_k ‖Y_k‖² = Σ_t ‖X_t‖².
inline Eigen::MatrixXcd full_dft(const Eigen::MatrixXd& values,
                                 std::int64_t start, std::int64_t end) {
  const std::int64_t t_seg = end - start;
  if (t_seg < 1)
    throw std::invalid_argument("full_dft: segment must be nonempty");
  const Eigen::Index p = values.rows();
  Eigen::MatrixXcd y(t_seg, p);
  Eigen::FFT<double> fft;
  std::vector<double> in(static_cast<std::size_t>(t_seg));
  std::vector<std::complex<double>> spectrum;
  const double scale = 1.0 / std::sqrt(static_cast<double>(t_seg));
  for (Eigen::Index pi = 0; pi < p; ++pi) {
    for (std::int64_t m = 0; m < t_seg; ++m)
      in[static_cast<std::size_t>(m)] = values(pi, start + m);
    fft.fwd(spectrum, in);
    for (std::int64_t k = 0; k < t_seg; ++k) {
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) *
                           static_cast<double>(start + 1) /
                           static_cast<double>(t_seg);
      const std::complex<double> shift(std::cos(phase), std::sin(phase));
      y(k, pi) = scale * shift * spectrum[static_cast<std::size_t>(k)];
    }
  }
  return y;
}

// ── Whittle likelihood ───────────────────────────────────────────────────────

// Conditional Whittle log-likelihood of one segment given factors.
//   y:       K×P local DFT
//   lambda:  K entries of P×Q loading matrices
//   factors: K×Q, row k = D_k
//   sigma2:  P idiosyncratic variances
inline double whittle_loglik(const Eigen::MatrixXcd& y,
                             const std::vector<Eigen::MatrixXcd>& lambda,
                             const Eigen::MatrixXcd& factors,
                             const Eigen::VectorXd& sigma2) {
  const Eigen::Index k_count = y.rows();
  const Eigen::Index p = y.cols();
  if (static_cast<Eigen::Index>(lambda.size()) != k_count ||
      factors.rows() != k_count)
    throw std::invalid_argument("whittle_loglik: frequency count mismatch");
  if (sigma2.size() != p)
    throw std::invalid_argument("whittle_loglik: sigma2 length mismatch");
  for (Eigen::Index pi = 0; pi < p; ++pi)
    if (!(sigma2(pi) > 0.0))
      throw std::domain_error(
          "whittle_loglik: idiosyncratic variances must be positive");

  double loglik = 0.0;
  const double log_sigma_sum = 0.5 * sigma2.array().log().sum();
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const Eigen::VectorXcd fitted =
        lambda[static_cast<std::size_t>(k)] * factors.row(k).transpose();
    for (Eigen::Index pi = 0; pi < p; ++pi)
      loglik -= std::norm(y(k, pi) - fitted(pi)) / sigma2(pi);
  }
  loglik -= static_cast<double>(k_count) * log_sigma_sum;
  return loglik;
}

// ── Spectral matrices and functionals ────────────────────────────────────────

// f = Λ Λ* + diag(σ²); Hermitian positive definite by construction.
inline Eigen::MatrixXcd assemble_spectrum(const Eigen::MatrixXcd& lambda,
                                          const Eigen::VectorXd& sigma2) {
  if (sigma2.size() != lambda.rows())
    throw std::invalid_argument("assemble_spectrum: sigma2 length mismatch");
  Eigen::MatrixXcd f = lambda * lambda.adjoint();
  for (Eigen::Index pi = 0; pi < lambda.rows(); ++pi)
    f(pi, pi) += sigma2(pi);
  return f;
}

// ρ²_jk(ω) = |f_jk|² / (f_jj f_kk), elementwise over a spectral matrix.
inline Eigen::MatrixXd squared_coherence(const Eigen::MatrixXcd& f) {
  const Eigen::Index p = f.rows();
  if (f.cols() != p)
    throw std::invalid_argument("squared_coherence: matrix must be square");
  Eigen::VectorXd diag(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    diag(j) = f(j, j).real();
    if (!(diag(j) > 0.0))
      throw std::domain_error(
          "squared_coherence: spectral diagonal must be positive");
  }
  Eigen::MatrixXd rho(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k)
      rho(j, k) = std::norm(f(j, k)) / (diag(j) * diag(k));
  return rho;
}

// ── Frequency-band integration ───────────────────────────────────────────────

struct Band {
  double lo = 0.0;  // inclusive lower edge
  double hi = 0.0;  // inclusive upper edge
  bool hz = false;  // true: edges in Hz (requires a sample rate); false: cycles/sample
};

namespace detail {

// Linear interpolation of matrix values on an ascending grid; omega must lie
// inside [grid.front(), grid.back()].
inline Eigen::MatrixXcd interp_matrix(const Eigen::VectorXd& grid,
                                      const std::vector<Eigen::MatrixXcd>& values,
                                      double omega) {
  const Eigen::Index n = grid.size();
  if (omega <= grid(0)) return values.front();
  if (omega >= grid(n - 1)) return values.back();
  Eigen::Index hi = 1;
  while (grid(hi) < omega) ++hi;
  const double span = grid(hi) - grid(hi - 1);
  const double w = (omega - grid(hi - 1)) / span;
  return (1.0 - w) * values[static_cast<std::size_t>(hi - 1)] +
         w * values[static_cast<std::size_t>(hi)];
}

}  // namespace detail

// Trapezoid integral of a spectral matrix curve over a frequency band.  The
// grid is in cycles per sample; a band in Hz is mapped through the sample
// rate and the integral is taken over the Hz variable.  Band edges interior
// to the grid are honored exactly through linear interpolation; the band is
// clipped to the grid's range.
inline Eigen::MatrixXcd band_collapse(const Eigen::VectorXd& omega,
                                      const std::vector<Eigen::MatrixXcd>& f,
                                      const Band& band,
                                      std::optional<double> sample_rate_hz) {
  if (omega.size() < 2 ||
      static_cast<std::size_t>(omega.size()) != f.size())
    throw std::invalid_argument(
        "band_collapse: need a grid of at least two frequencies with matching values");
  for (Eigen::Index i = 1; i < omega.size(); ++i)
    if (!(omega(i) > omega(i - 1)))
      throw std::invalid_argument("band_collapse: grid must be ascending");
  if (!(band.hi > band.lo))
    throw std::invalid_argument("band_collapse: band must have positive width");

  double rate = 1.0;
  if (band.hz) {
    if (!sample_rate_hz || !(*sample_rate_hz > 0.0))
      throw std::invalid_argument(
          "band_collapse: Hz band requires a positive sample rate");
    rate = *sample_rate_hz;
  }
  const double lo = std::max(band.lo / rate, omega(0));
  const double hi = std::min(band.hi / rate, omega(omega.size() - 1));
  if (!(hi > lo))
    throw std::invalid_argument(
        "band_collapse: band does not intersect the frequency grid");

  // Integration knots: the clipped edges plus every interior grid point.
  std::vector<double> knots;
  knots.push_back(lo);
  for (Eigen::Index i = 0; i < omega.size(); ++i)
    if (omega(i) > lo && omega(i) < hi) knots.push_back(omega(i));
  knots.push_back(hi);

  const Eigen::Index p = f.front().rows();
  Eigen::MatrixXcd integral = Eigen::MatrixXcd::Zero(p, p);
  Eigen::MatrixXcd left = detail::interp_matrix(omega, f, knots[0]);
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const Eigen::MatrixXcd right = detail::interp_matrix(omega, f, knots[i]);
    integral += 0.5 * (knots[i] - knots[i - 1]) * (left + right);
    left = right;
  }
  // An Hz band integrates over ω_hz = rate · ω, stretching each dω by rate.
  return rate * integral;
}

// Band-collapsed squared coherence: |∫f_jk|² / (∫f_jj · ∫f_kk).
inline Eigen::MatrixXd band_coherence(const Eigen::VectorXd& omega,
                                      const std::vector<Eigen::MatrixXcd>& f,
                                      const Band& band,
                                      std::optional<double> sample_rate_hz) {
  const Eigen::MatrixXcd collapsed =
      band_collapse(omega, f, band, sample_rate_hz);
  return squared_coherence(collapsed);
}

}  // namespace specfact
