/* gibbs.hpp — conditional samplers for the locally stationary factor model
 *
 * Within one stationary segment with local DFT Y (K×P), the model is
 *
 *   Y_k | Λ_k, D_k ~ CN(Λ_k D_k, diag(σ²)),   D_k ~ CN(0, I_Q),
 *
 * each loading curve Λ^{(pq)}(ω) expanded in the trigonometric bases of
 * basis.hpp with coefficients α_pq (real part) and β_pq (imaginary part).
 * The log-likelihood contribution of one (k, p) cell is the unnormalized
 * Whittle form −½ log σ²_p − |Y_kp − (Λ_k D_k)_p|²/σ²_p, and every
 * conditional below is exactly conjugate to it:
 *
 *   prior                                conditional update
 *   α_pq0 ~ N(0, ψ_q⁻¹)                  Normal (precision = prior + data)
 *   α_pqs ~ N(0, (2πs)⁻¹ τ²_re ψ_q⁻¹)    via the quadratic expansion
 *   β_pqs ~ N(0, (2πs)⁻¹ τ²_im ψ_q⁻¹)      |c−(a+ib)D|² = |c|² − 2a Re{c D̄}
 *                                                  − 2b Im{c D̄} + (a²+b²)|D|²
 *   τ² | g ~ IG(ν/2, ν/g)                IG with the (2πs)-weighted sum of
 *                                          squared penalized coefficients
 *   g ~ IG(½, 1/G²)                      IG((ν+1)/2, ν/τ² + 1/G²)
 *   φ_h ~ Ga(a_h, 1)                     Gamma; the shape counts only the
 *     ψ_q = Π_{h'≤q} φ_h'                  coefficient blocks with q ≥ h
 *   σ²_p | g ~ IG(ν/2, ν/g)              IG((ΣK_ℓ+ν)/2, Σ|resid|² + ν/g)
 *
 * Every sampler has a draw mode and an evaluate mode sharing one code path:
 * passing an Rng draws and returns the draw's log conditional density;
 * passing a target value instead installs it and returns its density.  The
 * evaluate mode is what makes sequential proposal densities for the
 * trans-dimensional moves exactly computable in both directions.
 */
#pragma once

#include "specfact/basis.hpp"
#include "specfact/partition.hpp"
#include "specfact/rng.hpp"
#include "specfact/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace specfact {

// ── Model configuration ──────────────────────────────────────────────────────

struct Hyper {
  int q = 1;             // number of factors
  int s = 10;            // basis order per curve part
  double nu = 3.0;       // half-t degrees of freedom
  double g_eps = 10.0;   // half-t scale of the idiosyncratic σ
  double g_tau = 10.0;   // half-t scale of the smoothing τ
  double a1 = 2.0;       // shrinkage gamma shape, first factor
  double a2 = 3.0;       // shrinkage gamma shape, later factors

  void validate() const {
    if (q < 1) throw std::invalid_argument("Hyper: q must be at least 1");
    if (s < 2) throw std::invalid_argument("Hyper: s must be at least 2");
    if (!(nu > 0) || !(g_eps > 0) || !(g_tau > 0) || !(a1 > 0) || !(a2 > 0))
      throw std::invalid_argument("Hyper: scalar hyperparameters must be positive");
  }
};

// ── Per-segment state ────────────────────────────────────────────────────────

// Immutable per-segment data: local DFT and basis designs on its grid.
struct SegmentData {
  Eigen::MatrixXcd y;     // K×P
  Eigen::VectorXd omega;  // K
  BasisDesign design;     // w_re, w_im: K×S
  std::int64_t start = 0, end = 0;

  int k() const { return static_cast<int>(y.rows()); }
  int p() const { return static_cast<int>(y.cols()); }
};

inline SegmentData build_segment_data(const Eigen::MatrixXd& values,
                                      std::int64_t start, std::int64_t end,
                                      int order) {
  SegmentData data;
  SegmentDft dft = local_dft_segment(values, start, end);
  data.y = std::move(dft.y);
  data.omega = std::move(dft.omega);
  data.design = build_design(data.omega, order);
  data.start = start;
  data.end = end;
  return data;
}

// Mutable per-segment parameters.  Coefficient matrices are S×(P·Q) with
// column index q·P + p holding the S-vector of curve (p, q).
struct SegmentParams {
  Eigen::MatrixXd alpha, beta;       // S×(P·Q)
  Eigen::MatrixXcd factors;          // K×Q
  Eigen::MatrixXd tau2_re, tau2_im;  // P×Q
  Eigen::MatrixXd g_re, g_im;        // P×Q
  Eigen::VectorXd phi_re, phi_im;    // Q

  int p() const { return static_cast<int>(tau2_re.rows()); }
  int q() const { return static_cast<int>(tau2_re.cols()); }
  int s() const { return static_cast<int>(alpha.rows()); }
  int coeff_col(int pi, int qi) const { return qi * p() + pi; }

  static SegmentParams init(int p, int q, int s, int k) {
    SegmentParams params;
    params.alpha = Eigen::MatrixXd::Zero(s, p * q);
    params.beta = Eigen::MatrixXd::Zero(s, p * q);
    params.factors = Eigen::MatrixXcd::Zero(k, q);
    params.tau2_re = Eigen::MatrixXd::Ones(p, q);
    params.tau2_im = Eigen::MatrixXd::Ones(p, q);
    params.g_re = Eigen::MatrixXd::Ones(p, q);
    params.g_im = Eigen::MatrixXd::Ones(p, q);
    params.phi_re = Eigen::VectorXd::Ones(q);
    params.phi_im = Eigen::VectorXd::Ones(q);
    return params;
  }
};

// Idiosyncratic variances shared by every segment.
struct SharedNoise {
  Eigen::VectorXd sigma2;  // P
  Eigen::VectorXd g_eps;   // P

  static SharedNoise init(int p) {
    return SharedNoise{Eigen::VectorXd::Ones(p), Eigen::VectorXd::Ones(p)};
  }
};

// ψ_q = Π_{h ≤ q} φ_h.
inline Eigen::VectorXd cumulative_shrinkage(const Eigen::VectorXd& phi) {
  Eigen::VectorXd psi(phi.size());
  double prod = 1.0;
  for (Eigen::Index h = 0; h < phi.size(); ++h) {
    prod *= phi(h);
    psi(h) = prod;
  }
  return psi;
}

// ── Working buffers ──────────────────────────────────────────────────────────

// Λ stored flat as (P·Q)×K so each frequency's P×Q matrix is one contiguous
// column; fitted = Λ_k D_k cached as K×P.
struct SegmentWorkspace {
  Eigen::MatrixXcd lambda_flat;  // (P·Q)×K
  Eigen::MatrixXcd fitted;       // K×P
  int p = 0, q = 0;

  Eigen::Map<const Eigen::MatrixXcd> lambda_at(int k) const {
    return {lambda_flat.data() +
                static_cast<std::ptrdiff_t>(k) * lambda_flat.rows(),
            p, q};
  }

  void rebuild_lambda(const SegmentData& data, const SegmentParams& params) {
    p = params.p();
    q = params.q();
    lambda_flat.resize(p * q, data.k());
    for (int qi = 0; qi < q; ++qi)
      for (int pi = 0; pi < p; ++pi) {
        const int col = params.coeff_col(pi, qi);
        lambda_flat.row(qi * p + pi) =
            (data.design.w_re * params.alpha.col(col) +
             std::complex<double>(0, 1) *
                 (data.design.w_im * params.beta.col(col)))
                .transpose();
      }
  }

  void set_loading_row(const SegmentData& data, const SegmentParams& params,
                       int pi, int qi) {
    const int col = params.coeff_col(pi, qi);
    lambda_flat.row(qi * p + pi) =
        (data.design.w_re * params.alpha.col(col) +
         std::complex<double>(0, 1) *
             (data.design.w_im * params.beta.col(col)))
            .transpose();
  }

  void rebuild_fitted(const SegmentData& data, const SegmentParams& params) {
    fitted.resize(data.k(), p);
    for (int k = 0; k < data.k(); ++k)
      fitted.row(k) =
          (lambda_at(k) * params.factors.row(k).transpose()).transpose();
  }

  static SegmentWorkspace build(const SegmentData& data,
                                const SegmentParams& params) {
    SegmentWorkspace ws;
    ws.rebuild_lambda(data, params);
    ws.rebuild_fitted(data, params);
    return ws;
  }
};

// ── Conditional parameter blocks ─────────────────────────────────────────────

struct ComplexNormalParams {
  Eigen::VectorXcd mean;
  Eigen::MatrixXcd cov;
};

// D_k | rest ~ CN(μ, Σ) with Σ = (Λ_k* Σ_ε⁻¹ Λ_k + I_Q)⁻¹,
// μ = Σ Λ_k* Σ_ε⁻¹ Y_k.
inline ComplexNormalParams factor_conditional(const SegmentData& data,
                                              const SegmentWorkspace& ws,
                                              const Eigen::VectorXd& sigma2,
                                              int k) {
  const auto lambda = ws.lambda_at(k);
  const Eigen::VectorXd inv_sigma2 = sigma2.cwiseInverse();
  Eigen::MatrixXcd precision =
      lambda.adjoint() * inv_sigma2.asDiagonal() * lambda;
  precision += Eigen::MatrixXcd::Identity(ws.q, ws.q);
  Eigen::LLT<Eigen::MatrixXcd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("factor_conditional: precision not positive definite");
  ComplexNormalParams out;
  out.cov = llt.solve(Eigen::MatrixXcd::Identity(ws.q, ws.q));
  out.mean = llt.solve(lambda.adjoint() *
                       inv_sigma2.asDiagonal() *
                       data.y.row(k).transpose());
  return out;
}

struct NormalBlockParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

namespace detail {

// Prior precision diagonal of one coefficient vector: intercepts carry ψ_q,
// penalized harmonics carry (2πs) ψ_q / τ².
inline Eigen::VectorXd coeff_prior_precision(int order, BasisPart part,
                                             double psi_q, double tau2) {
  Eigen::VectorXd prior(order);
  for (int j = 0; j < order; ++j) {
    const double weight = penalty_weight(j, part);
    prior(j) = weight == 0.0 ? psi_q : weight * psi_q / tau2;
  }
  return prior;
}

// Data cross-moment matrix M_q = Σ_k |D_kq|² w_k w_kᵀ for one design.
inline Eigen::MatrixXd factor_weighted_gram(const Eigen::MatrixXd& design,
                                            const Eigen::MatrixXcd& factors,
                                            int qi) {
  const Eigen::VectorXd weights = factors.col(qi).cwiseAbs2();
  return design.transpose() * weights.asDiagonal() * design;
}

// Residual of channel p with loading column q removed:
// r_k = Y_kp − fitted_kp + Λ^{(pq)}_k D_kq.
inline Eigen::VectorXcd column_free_residual(const SegmentData& data,
                                             const SegmentParams& params,
                                             const SegmentWorkspace& ws,
                                             int pi, int qi) {
  return data.y.col(pi) - ws.fitted.col(pi) +
         ws.lambda_flat.row(qi * ws.p + pi).transpose().cwiseProduct(
             params.factors.col(qi));
}

// Draws from N(μ, P⁻¹) or evaluates a target under it; one Cholesky of the
// precision serves both.  Returns the log density.
inline double draw_or_eval_normal_block(const NormalBlockParams& block,
                                        Rng* rng, Eigen::VectorXd& value,
                                        const char* who) {
  Eigen::MatrixXd precision = block.precision;
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    // One jitter retry scaled to the matrix before giving up.
    const double jitter =
        1e-10 * precision.trace() / static_cast<double>(precision.rows());
    precision += jitter * Eigen::MatrixXd::Identity(precision.rows(),
                                                    precision.cols());
    llt.compute(precision);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(std::string(who) +
                               ": precision matrix is singular after jitter");
  }
  const Eigen::Index n = precision.rows();
  if (rng != nullptr) {
    Eigen::VectorXd white(n);
    for (Eigen::Index i = 0; i < n; ++i) white(i) = rng->normal();
    value = block.mean +
            llt.matrixU().solve(white);  // L⁻ᵀ z has covariance P⁻¹
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const Eigen::VectorXd centered = value - block.mean;
  const double quad = centered.dot(precision * centered);
  return 0.5 * log_det -
         0.5 * static_cast<double>(n) * std::log(2 * std::numbers::pi) -
         0.5 * quad;
}

}  // namespace detail

// α_pq | rest: precision = prior + (2/σ²_p) M_q^{re},
// mean = precision⁻¹ (2/σ²_p) W_reᵀ Re{r ∘ conj(D_q)}.
inline NormalBlockParams real_coeff_conditional(
    const SegmentData& data, const SegmentParams& params,
    const SegmentWorkspace& ws, const Eigen::VectorXd& sigma2,
    const Eigen::MatrixXd& m_q, int pi, int qi, double psi_q) {
  const double tau2 = params.tau2_re(pi, qi);
  const double two_over_sigma2 = 2.0 / sigma2(pi);
  NormalBlockParams block;
  block.precision = two_over_sigma2 * m_q;
  block.precision.diagonal() += detail::coeff_prior_precision(
      params.s(), BasisPart::real_part, psi_q, tau2);
  const Eigen::VectorXcd resid =
      detail::column_free_residual(data, params, ws, pi, qi);
  const Eigen::VectorXd cross =
      resid.cwiseProduct(params.factors.col(qi).conjugate()).real();
  const Eigen::VectorXd rhs =
      two_over_sigma2 * (data.design.w_re.transpose() * cross);
  block.mean = block.precision.ldlt().solve(rhs);
  return block;
}

// β_pq | rest: same structure through the imaginary design, with
// mean ∝ W_imᵀ Im{r ∘ conj(D_q)}.
inline NormalBlockParams imag_coeff_conditional(
    const SegmentData& data, const SegmentParams& params,
    const SegmentWorkspace& ws, const Eigen::VectorXd& sigma2,
    const Eigen::MatrixXd& m_q, int pi, int qi, double psi_q) {
  const double tau2 = params.tau2_im(pi, qi);
  const double two_over_sigma2 = 2.0 / sigma2(pi);
  NormalBlockParams block;
  block.precision = two_over_sigma2 * m_q;
  block.precision.diagonal() += detail::coeff_prior_precision(
      params.s(), BasisPart::imag_part, psi_q, tau2);
  const Eigen::VectorXcd resid =
      detail::column_free_residual(data, params, ws, pi, qi);
  const Eigen::VectorXd cross =
      resid.cwiseProduct(params.factors.col(qi).conjugate()).imag();
  const Eigen::VectorXd rhs =
      two_over_sigma2 * (data.design.w_im.transpose() * cross);
  block.mean = block.precision.ldlt().solve(rhs);
  return block;
}

struct IgParams {
  double shape = 0.0;
  double scale = 0.0;
};

// τ²_pq | rest: the real side excludes the unpenalized intercept, so its
// shape is (S+ν−1)/2 against the imaginary side's (S+ν)/2.
inline IgParams smoothing_conditional(const SegmentParams& params,
                                      const Hyper& hyper, int pi, int qi,
                                      BasisPart part) {
  const int order = params.s();
  const Eigen::VectorXd psi = cumulative_shrinkage(
      part == BasisPart::real_part ? params.phi_re : params.phi_im);
  const auto& coeffs =
      part == BasisPart::real_part ? params.alpha : params.beta;
  const double g = part == BasisPart::real_part ? params.g_re(pi, qi)
                                                : params.g_im(pi, qi);
  double weighted_ss = 0.0;
  int penalized = 0;
  for (int j = 0; j < order; ++j) {
    const double weight = penalty_weight(j, part);
    if (weight == 0.0) continue;
    const double c = coeffs(j, params.coeff_col(pi, qi));
    weighted_ss += weight * c * c;
    ++penalized;
  }
  IgParams out;
  out.shape = 0.5 * (penalized + hyper.nu);
  out.scale = 0.5 * psi(qi) * weighted_ss + hyper.nu / g;
  return out;
}

// g_pq | τ²_pq ~ IG((ν+1)/2, ν/τ² + 1/G²).
inline IgParams hyper_g_conditional(const SegmentParams& params,
                                    const Hyper& hyper, int pi, int qi,
                                    BasisPart part) {
  const double tau2 = part == BasisPart::real_part ? params.tau2_re(pi, qi)
                                                   : params.tau2_im(pi, qi);
  IgParams out;
  out.shape = 0.5 * (hyper.nu + 1.0);
  out.scale = hyper.nu / tau2 + 1.0 / (hyper.g_tau * hyper.g_tau);
  return out;
}

struct GaParams {
  double shape = 0.0;
  double rate = 0.0;
};

// φ_h | rest: exact conjugate form.  Each coefficient with column q ≥ h
// contributes ½ to the shape (its prior normalization carries φ_h^{1/2}) and
// its ψ_q^{(h)}-weighted squared value to the rate; the Ga(a, 1) prior adds 1.
inline GaParams shrinkage_conditional(const SegmentParams& params,
                                      const Hyper& hyper, int h,
                                      BasisPart part) {
  const int p = params.p();
  const int q = params.q();
  const int order = params.s();
  const auto& phi = part == BasisPart::real_part ? params.phi_re : params.phi_im;
  const auto& coeffs = part == BasisPart::real_part ? params.alpha : params.beta;
  const auto& tau2 = part == BasisPart::real_part ? params.tau2_re : params.tau2_im;

  GaParams out;
  out.shape = (h == 0 ? hyper.a1 : hyper.a2) +
              0.5 * static_cast<double>(p) * order * (q - h);
  out.rate = 1.0;
  for (int qi = h; qi < q; ++qi) {
    // ψ_q with factor h removed: Π_{t ≤ q, t ≠ h} φ_t.
    double psi_partial = 1.0;
    for (int t = 0; t <= qi; ++t)
      if (t != h) psi_partial *= phi(t);
    double block_sum = 0.0;
    for (int pi = 0; pi < p; ++pi) {
      const int col = params.coeff_col(pi, qi);
      for (int j = 0; j < order; ++j) {
        const double weight = penalty_weight(j, part);
        const double c = coeffs(j, col);
        block_sum += weight == 0.0 ? 0.5 * c * c
                                   : 0.5 * weight * c * c / tau2(pi, qi);
      }
    }
    out.rate += psi_partial * block_sum;
  }
  return out;
}

// σ²_p | rest over all segments combined: IG((ΣK_ℓ+ν)/2, Σ|resid|² + ν/g).
inline IgParams noise_conditional(double resid2_sum, std::int64_t k_total,
                                  double g_eps, double nu) {
  IgParams out;
  out.shape = 0.5 * (static_cast<double>(k_total) + nu);
  out.scale = resid2_sum + nu / g_eps;
  return out;
}

inline IgParams noise_hyper_conditional(double sigma2, const Hyper& hyper) {
  IgParams out;
  out.shape = 0.5 * (hyper.nu + 1.0);
  out.scale = hyper.nu / sigma2 + 1.0 / (hyper.g_eps * hyper.g_eps);
  return out;
}

// ── Samplers (draw or evaluate) ──────────────────────────────────────────────

// Exactly one of rng / target may be null: with rng the block is drawn and
// installed; with target the target is installed instead.  Either way the
// function returns the log conditional density of the installed value and
// leaves the workspace consistent with it.

inline double sample_factors(const SegmentData& data, SegmentParams& params,
                             SegmentWorkspace& ws,
                             const Eigen::VectorXd& sigma2, Rng* rng,
                             const Eigen::MatrixXcd* target = nullptr) {
  if ((rng == nullptr) == (target == nullptr))
    throw std::invalid_argument(
        "sample_factors: exactly one of rng and target must be given");
  double log_density = 0.0;
  for (int k = 0; k < data.k(); ++k) {
    const ComplexNormalParams cn = factor_conditional(data, ws, sigma2, k);
    if (rng != nullptr) {
      params.factors.row(k) =
          sample_complex_normal(cn.mean, cn.cov, *rng).transpose();
    } else {
      params.factors.row(k) = target->row(k);
    }
    log_density += density::log_complex_normal(
        params.factors.row(k).transpose(), cn.mean, cn.cov);
  }
  ws.rebuild_fitted(data, params);
  return log_density;
}

// Sweeps every α_pq (q outer, p inner), refreshing Λ and the fitted values
// after each curve so later conditionals see the updates.
inline double sample_real_coeffs(const SegmentData& data, SegmentParams& params,
                                 SegmentWorkspace& ws,
                                 const Eigen::VectorXd& sigma2, Rng* rng,
                                 const Eigen::MatrixXd* target = nullptr) {
  if ((rng == nullptr) == (target == nullptr))
    throw std::invalid_argument(
        "sample_real_coeffs: exactly one of rng and target must be given");
  const Eigen::VectorXd psi = cumulative_shrinkage(params.phi_re);
  double log_density = 0.0;
  for (int qi = 0; qi < params.q(); ++qi) {
    const Eigen::MatrixXd m_q =
        detail::factor_weighted_gram(data.design.w_re, params.factors, qi);
    for (int pi = 0; pi < params.p(); ++pi) {
      const NormalBlockParams block = real_coeff_conditional(
          data, params, ws, sigma2, m_q, pi, qi, psi(qi));
      const int col = params.coeff_col(pi, qi);
      Eigen::VectorXd value;
      if (target != nullptr) value = target->col(col);
      log_density += detail::draw_or_eval_normal_block(
          block, rng, value, "sample_real_coeffs");
      const Eigen::VectorXcd old_row =
          ws.lambda_flat.row(qi * ws.p + pi).transpose();
      params.alpha.col(col) = value;
      ws.set_loading_row(data, params, pi, qi);
      // The fitted values move by (Λ_new − Λ_old) D_q on channel p.
      ws.fitted.col(pi) +=
          (ws.lambda_flat.row(qi * ws.p + pi).transpose() - old_row)
              .cwiseProduct(params.factors.col(qi));
    }
  }
  return log_density;
}

inline double sample_imag_coeffs(const SegmentData& data, SegmentParams& params,
                                 SegmentWorkspace& ws,
                                 const Eigen::VectorXd& sigma2, Rng* rng,
                                 const Eigen::MatrixXd* target = nullptr) {
  if ((rng == nullptr) == (target == nullptr))
    throw std::invalid_argument(
        "sample_imag_coeffs: exactly one of rng and target must be given");
  const Eigen::VectorXd psi = cumulative_shrinkage(params.phi_im);
  double log_density = 0.0;
  for (int qi = 0; qi < params.q(); ++qi) {
    const Eigen::MatrixXd m_q =
        detail::factor_weighted_gram(data.design.w_im, params.factors, qi);
    for (int pi = 0; pi < params.p(); ++pi) {
      const NormalBlockParams block = imag_coeff_conditional(
          data, params, ws, sigma2, m_q, pi, qi, psi(qi));
      const int col = params.coeff_col(pi, qi);
      Eigen::VectorXd value;
      if (target != nullptr) value = target->col(col);
      log_density += detail::draw_or_eval_normal_block(
          block, rng, value, "sample_imag_coeffs");
      const Eigen::VectorXcd old_row =
          ws.lambda_flat.row(qi * ws.p + pi).transpose();
      params.beta.col(col) = value;
      ws.set_loading_row(data, params, pi, qi);
      ws.fitted.col(pi) +=
          (ws.lambda_flat.row(qi * ws.p + pi).transpose() - old_row)
              .cwiseProduct(params.factors.col(qi));
    }
  }
  return log_density;
}

inline void sample_smoothing(SegmentParams& params, const Hyper& hyper,
                             Rng& rng) {
  for (int qi = 0; qi < params.q(); ++qi)
    for (int pi = 0; pi < params.p(); ++pi) {
      const IgParams re =
          smoothing_conditional(params, hyper, pi, qi, BasisPart::real_part);
      params.tau2_re(pi, qi) = rng.inverse_gamma(re.shape, re.scale);
      const IgParams im =
          smoothing_conditional(params, hyper, pi, qi, BasisPart::imag_part);
      params.tau2_im(pi, qi) = rng.inverse_gamma(im.shape, im.scale);
    }
}

// Draws every g_pq from its conditional given τ², or installs targets and
// returns their density — the same dual role as the coefficient samplers.
inline double sample_hyper_g(SegmentParams& params, const Hyper& hyper,
                             Rng* rng,
                             const Eigen::MatrixXd* g_re_target = nullptr,
                             const Eigen::MatrixXd* g_im_target = nullptr) {
  const bool has_targets = g_re_target != nullptr && g_im_target != nullptr;
  if ((rng == nullptr) == !has_targets ||
      (rng != nullptr && (g_re_target != nullptr || g_im_target != nullptr)))
    throw std::invalid_argument(
        "sample_hyper_g: exactly one of rng and the target pair must be given");
  double log_density = 0.0;
  for (int qi = 0; qi < params.q(); ++qi)
    for (int pi = 0; pi < params.p(); ++pi) {
      const IgParams re =
          hyper_g_conditional(params, hyper, pi, qi, BasisPart::real_part);
      params.g_re(pi, qi) = rng != nullptr ? rng->inverse_gamma(re.shape,
                                                                re.scale)
                                           : (*g_re_target)(pi, qi);
      log_density += density::log_inverse_gamma(params.g_re(pi, qi), re.shape,
                                                re.scale);
      const IgParams im =
          hyper_g_conditional(params, hyper, pi, qi, BasisPart::imag_part);
      params.g_im(pi, qi) = rng != nullptr ? rng->inverse_gamma(im.shape,
                                                                im.scale)
                                           : (*g_im_target)(pi, qi);
      log_density += density::log_inverse_gamma(params.g_im(pi, qi), im.shape,
                                                im.scale);
    }
  return log_density;
}

// Updates φ (both parts) factor by factor.  Returns true when any conditional
// was degenerate (nonpositive rate) and replaced by a prior draw — with the
// exact conjugate rate (≥ 1) this is defensive only.
inline bool sample_shrinkage(SegmentParams& params, const Hyper& hyper,
                             Rng& rng) {
  bool degenerate = false;
  for (int h = 0; h < params.q(); ++h) {
    const GaParams re = shrinkage_conditional(params, hyper, h,
                                              BasisPart::real_part);
    if (re.rate > 0.0) {
      params.phi_re(h) = rng.gamma(re.shape, re.rate);
    } else {
      degenerate = true;
      params.phi_re(h) = rng.gamma(h == 0 ? hyper.a1 : hyper.a2, 1.0);
    }
    const GaParams im = shrinkage_conditional(params, hyper, h,
                                              BasisPart::imag_part);
    if (im.rate > 0.0) {
      params.phi_im(h) = rng.gamma(im.shape, im.rate);
    } else {
      degenerate = true;
      params.phi_im(h) = rng.gamma(h == 0 ? hyper.a1 : hyper.a2, 1.0);
    }
  }
  return degenerate;
}

// Sufficient statistics for the shared noise update.
struct NoiseSufficients {
  Eigen::VectorXd resid2;     // per channel: Σ_ℓ Σ_k |Y − Λ D|²
  std::int64_t k_total = 0;   // Σ_ℓ K_ℓ

  static NoiseSufficients zero(int p) {
    return NoiseSufficients{Eigen::VectorXd::Zero(p), 0};
  }

  void accumulate(const SegmentData& data, const SegmentWorkspace& ws) {
    resid2 += (data.y - ws.fitted).cwiseAbs2().colwise().sum().transpose();
    k_total += data.k();
  }
};

inline void sample_noise(SharedNoise& noise, const NoiseSufficients& stats,
                         const Hyper& hyper, Rng& rng) {
  const int p = static_cast<int>(noise.sigma2.size());
  for (int pi = 0; pi < p; ++pi) {
    const IgParams ig = noise_conditional(stats.resid2(pi), stats.k_total,
                                          noise.g_eps(pi), hyper.nu);
    noise.sigma2(pi) = rng.inverse_gamma(ig.shape, ig.scale);
    const IgParams hg = noise_hyper_conditional(noise.sigma2(pi), hyper);
    noise.g_eps(pi) = rng.inverse_gamma(hg.shape, hg.scale);
  }
}

// ── Full sweep (single stationary segment) ───────────────────────────────────

// One systematic scan: factors → coefficients (α then β) → smoothing and its
// hypers → shrinkage → shared noise and its hypers.
inline void gibbs_sweep(const SegmentData& data, SegmentParams& params,
                        SharedNoise& noise, const Hyper& hyper, Rng& rng,
                        SegmentWorkspace* workspace = nullptr) {
  SegmentWorkspace local;
  SegmentWorkspace& ws = workspace != nullptr ? *workspace : local;
  if (workspace == nullptr) ws = SegmentWorkspace::build(data, params);

  sample_factors(data, params, ws, noise.sigma2, &rng);
  sample_real_coeffs(data, params, ws, noise.sigma2, &rng);
  sample_imag_coeffs(data, params, ws, noise.sigma2, &rng);
  sample_smoothing(params, hyper, rng);
  sample_hyper_g(params, hyper, &rng);
  sample_shrinkage(params, hyper, rng);
  NoiseSufficients stats = NoiseSufficients::zero(params.p());
  stats.accumulate(data, ws);
  sample_noise(noise, stats, hyper, rng);
}

// ── Sequential segment proposal ──────────────────────────────────────────────

// Draws (or replays) a segment's factors and coefficients from the sequential
// full conditionals, seeding the loading field with whatever coefficients are
// already installed in params.  This one recipe, run in draw mode on one side
// of a move and evaluate mode on the other, makes every trans-dimensional
// proposal density exactly computable in both directions: pass rng to draw
// fresh values, or pass the three targets to install them.  Returns the total
// log proposal density either way.
inline double refresh_segment(const SegmentData& data, SegmentParams& params,
                              SegmentWorkspace& ws,
                              const Eigen::VectorXd& sigma2, Rng* rng,
                              const Eigen::MatrixXcd* d_target = nullptr,
                              const Eigen::MatrixXd* alpha_target = nullptr,
                              const Eigen::MatrixXd* beta_target = nullptr) {
  params.factors = Eigen::MatrixXcd::Zero(data.k(), params.q());
  ws.rebuild_lambda(data, params);
  ws.rebuild_fitted(data, params);
  double log_density = sample_factors(data, params, ws, sigma2, rng, d_target);
  log_density +=
      sample_real_coeffs(data, params, ws, sigma2, rng, alpha_target);
  log_density +=
      sample_imag_coeffs(data, params, ws, sigma2, rng, beta_target);
  return log_density;
}

// Pins every factor row at its conditional mean given the installed loading
// field, then refreshes the fitted values.  The result is a deterministic
// function of (coefficients, σ², extent), which makes it usable as the shared
// reference point of a two-sided proposal: both directions of a move can
// rebuild the identical factor field from seeds they both know.
inline void set_mean_factors(const SegmentData& data, SegmentParams& params,
                             SegmentWorkspace& ws,
                             const Eigen::VectorXd& sigma2) {
  for (int k = 0; k < data.k(); ++k) {
    const ComplexNormalParams cn = factor_conditional(data, ws, sigma2, k);
    params.factors.row(k) = cn.mean.transpose();
  }
  ws.rebuild_fitted(data, params);
}

// Coefficient half of a trans-dimensional proposal: the loading field is
// seeded with whatever coefficients are installed in params, the factors are
// pinned at their conditional mean given that seed, and α then β are drawn
// from (or evaluated under) the sequential full conditionals.  Because the
// pinned factors are deterministic in the seed, the density returned here is
// computable in both directions of a move without any factor draws entering
// the ratio.  Pass rng to draw, or the two targets to install them.
inline double propose_coefficients(const SegmentData& data,
                                   SegmentParams& params, SegmentWorkspace& ws,
                                   const Eigen::VectorXd& sigma2, Rng* rng,
                                   const Eigen::MatrixXd* alpha_target = nullptr,
                                   const Eigen::MatrixXd* beta_target = nullptr) {
  params.factors = Eigen::MatrixXcd::Zero(data.k(), params.q());
  ws.rebuild_lambda(data, params);
  ws.rebuild_fitted(data, params);
  set_mean_factors(data, params, ws, sigma2);
  double log_density =
      sample_real_coeffs(data, params, ws, sigma2, rng, alpha_target);
  log_density +=
      sample_imag_coeffs(data, params, ws, sigma2, rng, beta_target);
  return log_density;
}

// ── Log priors ───────────────────────────────────────────────────────────────

// D ~ CN(0, I): Σ −log π − |D_kq|².
inline double log_factor_prior(const SegmentParams& params) {
  const double n = static_cast<double>(params.factors.size());
  return -n * std::log(std::numbers::pi) - params.factors.cwiseAbs2().sum();
}

// α, β given τ², φ.
inline double log_coeff_prior(const SegmentParams& params, const Hyper&) {
  const Eigen::VectorXd psi_re = cumulative_shrinkage(params.phi_re);
  const Eigen::VectorXd psi_im = cumulative_shrinkage(params.phi_im);
  double total = 0.0;
  for (int qi = 0; qi < params.q(); ++qi)
    for (int pi = 0; pi < params.p(); ++pi) {
      const int col = params.coeff_col(pi, qi);
      for (int j = 0; j < params.s(); ++j) {
        const double w_re = penalty_weight(j, BasisPart::real_part);
        const double var_re = w_re == 0.0
                                  ? 1.0 / psi_re(qi)
                                  : params.tau2_re(pi, qi) / (w_re * psi_re(qi));
        total += density::log_normal(params.alpha(j, col), 0.0, var_re);
        const double w_im = penalty_weight(j, BasisPart::imag_part);
        const double var_im = params.tau2_im(pi, qi) / (w_im * psi_im(qi));
        total += density::log_normal(params.beta(j, col), 0.0, var_im);
      }
    }
  return total;
}

// τ² | g, both parts.
inline double log_smoothing_prior(const SegmentParams& params,
                                  const Hyper& hyper) {
  double total = 0.0;
  for (int qi = 0; qi < params.q(); ++qi)
    for (int pi = 0; pi < params.p(); ++pi) {
      total += density::log_inverse_gamma(params.tau2_re(pi, qi),
                                          0.5 * hyper.nu,
                                          hyper.nu / params.g_re(pi, qi));
      total += density::log_inverse_gamma(params.tau2_im(pi, qi),
                                          0.5 * hyper.nu,
                                          hyper.nu / params.g_im(pi, qi));
    }
  return total;
}

inline double log_hyper_g_prior(const SegmentParams& params,
                                const Hyper& hyper) {
  const double scale = 1.0 / (hyper.g_tau * hyper.g_tau);
  double total = 0.0;
  for (int qi = 0; qi < params.q(); ++qi)
    for (int pi = 0; pi < params.p(); ++pi) {
      total += density::log_inverse_gamma(params.g_re(pi, qi), 0.5, scale);
      total += density::log_inverse_gamma(params.g_im(pi, qi), 0.5, scale);
    }
  return total;
}

inline double log_shrinkage_prior(const SegmentParams& params,
                                  const Hyper& hyper) {
  double total = 0.0;
  for (int h = 0; h < params.q(); ++h) {
    const double shape = h == 0 ? hyper.a1 : hyper.a2;
    total += density::log_gamma(params.phi_re(h), shape, 1.0);
    total += density::log_gamma(params.phi_im(h), shape, 1.0);
  }
  return total;
}

// Joint prior of one segment's parameters (everything except shared noise).
inline double log_segment_prior(const SegmentParams& params,
                                const Hyper& hyper) {
  return log_factor_prior(params) + log_coeff_prior(params, hyper) +
         log_smoothing_prior(params, hyper) + log_hyper_g_prior(params, hyper) +
         log_shrinkage_prior(params, hyper);
}

// Prior of everything the factor-collapsed moves carry: coefficients and the
// scale hierarchy.  The factor prior is absorbed into the collapsed
// likelihood, so it must not be double counted here.
inline double log_collapsed_prior(const SegmentParams& params,
                                  const Hyper& hyper) {
  return log_coeff_prior(params, hyper) + log_smoothing_prior(params, hyper) +
         log_hyper_g_prior(params, hyper) + log_shrinkage_prior(params, hyper);
}

// σ² | g_ε plus the g_ε prior.
inline double log_noise_prior(const SharedNoise& noise, const Hyper& hyper) {
  const double scale = 1.0 / (hyper.g_eps * hyper.g_eps);
  double total = 0.0;
  for (Eigen::Index pi = 0; pi < noise.sigma2.size(); ++pi) {
    total += density::log_inverse_gamma(noise.sigma2(pi), 0.5 * hyper.nu,
                                        hyper.nu / noise.g_eps(pi));
    total += density::log_inverse_gamma(noise.g_eps(pi), 0.5, scale);
  }
  return total;
}

// Whittle log-likelihood of one segment from its cached fitted values.
inline double segment_loglik(const SegmentData& data,
                             const SegmentWorkspace& ws,
                             const Eigen::VectorXd& sigma2) {
  for (Eigen::Index pi = 0; pi < sigma2.size(); ++pi)
    if (!(sigma2(pi) > 0.0))
      throw std::domain_error(
          "segment_loglik: idiosyncratic variances must be positive");
  double loglik = -static_cast<double>(data.k()) * 0.5 *
                  sigma2.array().log().sum();
  const Eigen::MatrixXcd resid = data.y - ws.fitted;
  loglik -= (resid.cwiseAbs2() *
             sigma2.cwiseInverse().asDiagonal()).sum();
  return loglik;
}

// Factor-collapsed segment log-likelihood: the Gaussian factor integral
//   ∫ exp(−(Y_k − Λ_k D_k)* Σ⁻¹ (Y_k − Λ_k D_k)) π^{−Q} exp(−D_k* D_k) dD_k
//     = det(M_k)⁻¹ exp(−Y_k* Σ⁻¹ Y_k + b_k* M_k⁻¹ b_k),
// with M_k = Λ_k* Σ⁻¹ Λ_k + I_Q and b_k = Λ_k* Σ⁻¹ Y_k, carried on the same
// −½Σ_p log σ²_p per-frequency normalization as segment_loglik so the
// marginal and the conditional scores share one convention.  Only the
// loading field in ws is read; the installed factor values play no part.
inline double collapsed_segment_loglik(const SegmentData& data,
                                       const SegmentWorkspace& ws,
                                       const Eigen::VectorXd& sigma2) {
  for (Eigen::Index pi = 0; pi < sigma2.size(); ++pi)
    if (!(sigma2(pi) > 0.0))
      throw std::domain_error(
          "collapsed_segment_loglik: idiosyncratic variances must be positive");
  const Eigen::VectorXd inv_sigma2 = sigma2.cwiseInverse();
  const double norm_per_k = -0.5 * sigma2.array().log().sum();
  double total = 0.0;
  for (int k = 0; k < data.k(); ++k) {
    const auto lambda = ws.lambda_at(k);
    Eigen::MatrixXcd m = lambda.adjoint() * inv_sigma2.asDiagonal() * lambda;
    m += Eigen::MatrixXcd::Identity(ws.q, ws.q);
    Eigen::LLT<Eigen::MatrixXcd> llt(m);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "collapsed_segment_loglik: factor precision not positive definite");
    double log_det = 0.0;
    for (int qi = 0; qi < ws.q; ++qi)
      log_det += 2.0 * std::log(std::real(llt.matrixL()(qi, qi)));
    const Eigen::VectorXcd y = data.y.row(k).transpose();
    const Eigen::VectorXcd b = lambda.adjoint() * (inv_sigma2.asDiagonal() * y);
    const double y_quad = y.cwiseAbs2().dot(inv_sigma2);
    const double b_quad = std::real(b.dot(llt.solve(b)));
    total += norm_per_k - log_det - y_quad + b_quad;
  }
  return total;
}

}  // namespace specfact
