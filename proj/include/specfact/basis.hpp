/* basis.hpp — trigonometric smoothing bases for loading curves
 *
 * Real and imaginary parts of each loading curve are expanded in S terms:
 *
 *   Re Λ(ω) = α₀ + Σ_{s=1}^{S−1} α_s √2 cos(2πsω)
 *   Im Λ(ω) =      Σ_{s=1}^{S}   β_s √2 sin(2πsω)
 *
 * The √2-scaled harmonics are orthonormal in L²[0,1], so the Gram matrix of
 * either design is near-identity on a dense frequency grid.  Coefficient j of
 * the real design carries harmonic index j (index 0 = the unpenalized
 * intercept); coefficient j of the imaginary design carries harmonic index
 * j+1.  frequency_index()/penalty_weight() export that map so the samplers'
 * prior scales (variance ∝ 1/(2πs) for harmonic s) provably match the basis.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace specfact {

enum class BasisPart { real_part, imag_part };

// ── Index map ────────────────────────────────────────────────────────────────

// Harmonic index s carried by coefficient j; 0 marks the intercept.
inline int frequency_index(int coefficient, BasisPart part) {
  if (coefficient < 0)
    throw std::invalid_argument("frequency_index: coefficient must be >= 0");
  return part == BasisPart::real_part ? coefficient : coefficient + 1;
}

// Prior precision weight of coefficient j: 2πs for harmonic s, 0 for the
// intercept (whose prior does not shrink with the smoothing parameter).
inline double penalty_weight(int coefficient, BasisPart part) {
  const int s = frequency_index(coefficient, part);
  return s == 0 ? 0.0 : 2.0 * std::numbers::pi * static_cast<double>(s);
}

inline Eigen::VectorXd penalty_weights(int order, BasisPart part) {
  if (order < 2)
    throw std::invalid_argument("penalty_weights: order must be at least 2");
  Eigen::VectorXd weights(order);
  for (int j = 0; j < order; ++j) weights(j) = penalty_weight(j, part);
  return weights;
}

// ── Design matrices ──────────────────────────────────────────────────────────

struct BasisDesign {
  Eigen::MatrixXd w_re;  // K×S, column j = basis function of coefficient j
  Eigen::MatrixXd w_im;  // K×S

  Eigen::Index frequencies() const { return w_re.rows(); }
  Eigen::Index order() const { return w_re.cols(); }
};

// Evaluates both designs on a frequency grid (cycles per sample).
inline BasisDesign build_design(const Eigen::VectorXd& omega, int order) {
  if (order < 2)
    throw std::invalid_argument("build_design: order must be at least 2");
  const Eigen::Index k = omega.size();
  BasisDesign design;
  design.w_re.resize(k, order);
  design.w_im.resize(k, order);
  const double sqrt2 = std::numbers::sqrt2;
  for (Eigen::Index i = 0; i < k; ++i) {
    design.w_re(i, 0) = 1.0;
    for (int j = 1; j < order; ++j)
      design.w_re(i, j) =
          sqrt2 * std::cos(2.0 * std::numbers::pi * j * omega(i));
    for (int j = 0; j < order; ++j)
      design.w_im(i, j) =
          sqrt2 * std::sin(2.0 * std::numbers::pi * (j + 1) * omega(i));
  }
  return design;
}

// Λ(ω_k) = W_re α + i W_im β on the design's grid.
inline Eigen::VectorXcd evaluate_loading(const BasisDesign& design,
                                         const Eigen::VectorXd& alpha,
                                         const Eigen::VectorXd& beta) {
  if (alpha.size() != design.order() || beta.size() != design.order())
    throw std::invalid_argument(
        "evaluate_loading: coefficient length does not match design order");
  const Eigen::VectorXd real_part = design.w_re * alpha;
  const Eigen::VectorXd imag_part = design.w_im * beta;
  Eigen::VectorXcd loading(design.frequencies());
  loading.real() = real_part;
  loading.imag() = imag_part;
  return loading;
}

// Pointwise Λ(ω) for arbitrary ω, bypassing any precomputed design.
inline std::complex<double> loading_at(double omega,
                                       const Eigen::VectorXd& alpha,
                                       const Eigen::VectorXd& beta) {
  if (alpha.size() != beta.size() || alpha.size() < 2)
    throw std::invalid_argument(
        "loading_at: coefficient vectors must share an order of at least 2");
  const double sqrt2 = std::numbers::sqrt2;
  double real_part = alpha(0);
  for (Eigen::Index j = 1; j < alpha.size(); ++j)
    real_part +=
        alpha(j) * sqrt2 * std::cos(2.0 * std::numbers::pi * j * omega);
  double imag_part = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    imag_part +=
        beta(j) * sqrt2 * std::sin(2.0 * std::numbers::pi * (j + 1) * omega);
  return {real_part, imag_part};
}

}  // namespace specfact
