/* rng.hpp — deterministic random streams and density kernels
 *
 * One mt19937_64 engine per task, seeded through splitmix64 so that
 * (seed, task index) → stream is reproducible bit-for-bit across runs and
 * independent across tasks.  All variate algorithms are fixed here rather
 * than delegated to std::*_distribution, whose sequences are
 * implementation-defined; with the engine and the algorithm both pinned,
 * every draw in the project is deterministic.
 *
 * Also hosts the scalar/matrix log-density kernels shared by the samplers:
 *   N(μ, v)                     .5 log(2πv) + (x−μ)²/(2v), negated
 *   Ga(a, rate b)               a log b − log Γ(a) + (a−1) log x − b x
 *   IG(a, scale b)              a log b − log Γ(a) − (a+1) log x − b/x
 *   CN(μ, Σ)  (circular)        −Q log π − log det Σ − (z−μ)* Σ⁻¹ (z−μ)
 *
 * The circularly-symmetric complex normal is handled through its real
 * embedding: z ~ CN(μ, Σ) iff (Re z, Im z) ~ N₂Q with covariance
 * ½ [[Re Σ, −Im Σ], [Im Σ, Re Σ]], which reuses the real Cholesky for both
 * sampling and density evaluation.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace specfact {

// ── Seed derivation ──────────────────────────────────────────────────────────

// splitmix64 step; mixes a 64-bit state into a well-distributed output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ── Random stream ────────────────────────────────────────────────────────────

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Derives the stream for (seed, task): two splitmix64 steps decorrelate
  // adjacent task indices before they seed the engine.
  static Rng for_task(std::uint64_t seed, std::uint64_t task_index) {
    std::uint64_t s = seed ^ (0x5851f42d4c957f2dULL * (task_index + 1));
    std::uint64_t a = splitmix64(s);
    splitmix64(s);
    return Rng(a ^ s);
  }

  std::mt19937_64& engine() { return engine_; }

  // U(0,1) from the top 53 bits; never returns 0 or 1 exactly... the lower
  // endpoint 0 is possible with probability 2^-53 and is guarded where logs
  // are taken.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform over the integers {lo, ..., hi} by rejection on the top bits.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("Rng::uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return lo + static_cast<std::int64_t>(draw % span);
  }

  // Standard normal via Box–Muller with the companion variate cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double variance) {
    if (!(variance > 0.0))
      throw std::invalid_argument("Rng::normal: variance must be positive");
    return mean + std::sqrt(variance) * normal();
  }

  // Ga(shape, rate) via Marsaglia–Tsang squeeze; shape < 1 is lifted with the
  // boost Ga(shape+1) · U^{1/shape}.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw std::invalid_argument("Rng::gamma: shape and rate must be positive");
    if (shape < 1.0) {
      double u = uniform01();
      while (u <= 0.0) u = uniform01();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v / rate;
    }
  }

  // IG(shape, scale): if Y ~ Ga(shape, rate 1) then scale / Y ~ IG(shape, scale).
  double inverse_gamma(double shape, double scale) {
    if (!(scale > 0.0))
      throw std::invalid_argument("Rng::inverse_gamma: scale must be positive");
    return scale / gamma(shape, 1.0);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ── Scalar log densities ─────────────────────────────────────────────────────

namespace density {

inline double log_normal(double x, double mean, double variance) {
  if (!(variance > 0.0))
    throw std::invalid_argument("density::log_normal: variance must be positive");
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) -
         0.5 * d * d / variance;
}

inline double log_gamma(double x, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("density::log_gamma: shape and rate must be positive");
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

inline double log_inverse_gamma(double x, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument(
        "density::log_inverse_gamma: shape and scale must be positive");
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - scale / x;
}

}  // namespace density

// ── Complex multivariate normal ──────────────────────────────────────────────

// Real embedding of a Hermitian covariance: M = ½ [[Re Σ, −Im Σ], [Im Σ, Re Σ]].
inline Eigen::MatrixXd complex_normal_real_embedding(const Eigen::MatrixXcd& sigma) {
  const Eigen::Index q = sigma.rows();
  if (sigma.cols() != q)
    throw std::invalid_argument(
        "complex_normal_real_embedding: covariance must be square");
  Eigen::MatrixXd embed(2 * q, 2 * q);
  embed.topLeftCorner(q, q) = 0.5 * sigma.real();
  embed.topRightCorner(q, q) = -0.5 * sigma.imag();
  embed.bottomLeftCorner(q, q) = 0.5 * sigma.imag();
  embed.bottomRightCorner(q, q) = 0.5 * sigma.real();
  return embed;
}

// Draws z ~ CN(μ, Σ), circularly symmetric, through the real embedding.
inline Eigen::VectorXcd sample_complex_normal(const Eigen::VectorXcd& mean,
                                              const Eigen::MatrixXcd& sigma,
                                              Rng& rng) {
  const Eigen::Index q = mean.size();
  Eigen::LLT<Eigen::MatrixXd> llt(complex_normal_real_embedding(sigma));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "sample_complex_normal: covariance is not positive definite");
  Eigen::VectorXd white(2 * q);
  for (Eigen::Index i = 0; i < 2 * q; ++i) white(i) = rng.normal();
  const Eigen::VectorXd real_draw = llt.matrixL() * white;
  Eigen::VectorXcd z(q);
  for (Eigen::Index i = 0; i < q; ++i)
    z(i) = std::complex<double>(real_draw(i), real_draw(q + i)) + mean(i);
  return z;
}

namespace density {

// log CN(z; μ, Σ) = −Q log π − log det Σ − (z−μ)* Σ⁻¹ (z−μ).
inline double log_complex_normal(const Eigen::VectorXcd& z,
                                 const Eigen::VectorXcd& mean,
                                 const Eigen::MatrixXcd& sigma) {
  const Eigen::Index q = z.size();
  if (mean.size() != q || sigma.rows() != q || sigma.cols() != q)
    throw std::invalid_argument("density::log_complex_normal: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXcd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "density::log_complex_normal: covariance is not positive definite");
  // det Σ = Π |L_ii|² for the complex Cholesky factor L.
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < q; ++i)
    log_det += 2.0 * std::log(std::abs(llt.matrixL()(i, i)));
  const Eigen::VectorXcd centered = z - mean;
  const Eigen::VectorXcd solved = llt.solve(centered);
  const double quad = centered.dot(solved).real();
  return -static_cast<double>(q) * std::log(std::numbers::pi) - log_det - quad;
}

}  // namespace density

}  // namespace specfact
