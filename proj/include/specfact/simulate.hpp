/* simulate.hpp — bundled test processes and their exact spectra
 *
 * Four multichannel generators exercise the sampler and the baselines:
 *
 *   piecewise_vma    block-diagonal VMA(2) whose coefficients switch once,
 *                    halfway through the series;
 *   stationary_vma   the first regime of piecewise_vma on its own;
 *   four_segment_vma four VMA(2) regimes with changes at T/8, T/4, and T/2,
 *                    where the later two regimes also switch to a second,
 *                    more strongly correlated innovation sequence;
 *   slow_var         a VAR(1) whose coefficients drift linearly in time.
 *
 * Coefficient and innovation-covariance blocks are fixed 3×3 (VMA) and 2×2
 * (VAR) matrices lifted to P channels by block-diagonal replication, so P
 * must be divisible by 3 for the VMA kinds and by 6 for slow_var (whose
 * innovation covariance keeps the 3×3 block structure).  Change points scale
 * proportionally with T.
 *
 * Every process has a closed-form time-varying spectrum obtained from its
 * transfer function: f = Φ Σ Φ* with Φ(ω) = I + A₁e^{−2πiω} + A₂e^{−4πiω}
 * for a moving-average regime, and f = M⁻¹ Σ M⁻* with M(ω) = I − Θe^{−2πiω}
 * for the autoregression.  Both follow the time-domain recursions that
 * generate the data, so averaged periodograms of simulated series converge
 * to true_spectrum; the tests check exactly that.
 */
#pragma once

#include "specfact/multiseries.hpp"
#include "specfact/rng.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace specfact {

// ── Process specification ────────────────────────────────────────────────────

enum class ProcessKind {
  piecewise_vma,
  stationary_vma,
  four_segment_vma,
  slow_var,
};

inline const char* kind_name(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::piecewise_vma: return "piecewise";
    case ProcessKind::stationary_vma: return "stationary";
    case ProcessKind::four_segment_vma: return "four_segment";
    case ProcessKind::slow_var: return "slow";
  }
  throw std::logic_error("kind_name: unknown process kind");
}

inline ProcessKind kind_from_name(std::string_view name) {
  if (name == "piecewise") return ProcessKind::piecewise_vma;
  if (name == "stationary") return ProcessKind::stationary_vma;
  if (name == "four_segment" || name == "four-segment")
    return ProcessKind::four_segment_vma;
  if (name == "slow") return ProcessKind::slow_var;
  throw std::invalid_argument("process kind must be one of piecewise, "
                              "stationary, four_segment, slow; got '" +
                              std::string(name) + "'");
}

struct ProcessSpec {
  ProcessKind kind = ProcessKind::piecewise_vma;
  int p = 12;           // channels
  std::int64_t t = 1024;  // series length
  std::uint64_t seed = 0;

  void validate() const {
    const bool var = kind == ProcessKind::slow_var;
    const int block = var ? 6 : 3;
    if (p < block || p % block != 0)
      throw std::invalid_argument(
          std::string("ProcessSpec: p must be a positive multiple of ") +
          (var ? "6 for slow_var" : "3 for VMA processes"));
    const std::int64_t t_min =
        kind == ProcessKind::four_segment_vma ? 16 : 8;
    if (t < t_min)
      throw std::invalid_argument("ProcessSpec: t is below the minimum "
                                  "length for this process kind");
  }

  // Interior change points, the printed break fractions scaled to T.
  std::vector<std::int64_t> change_points() const {
    auto at = [&](double frac) {
      return static_cast<std::int64_t>(std::llround(frac * t));
    };
    switch (kind) {
      case ProcessKind::piecewise_vma: return std::vector{at(0.5)};
      case ProcessKind::four_segment_vma:
        return std::vector{at(0.125), at(0.25), at(0.5)};
      default: return std::vector<std::int64_t>{};
    }
  }

  nlohmann::json to_json() const {
    return {{"process", kind_name(kind)}, {"p", p}, {"t", t}, {"seed", seed}};
  }
  static ProcessSpec from_json(const nlohmann::json& j) {
    ProcessSpec spec;
    spec.kind = kind_from_name(j.at("process").get<std::string>());
    spec.p = j.at("p").get<int>();
    spec.t = j.at("t").get<std::int64_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.validate();
    return spec;
  }
};

// ── Coefficient blocks ───────────────────────────────────────────────────────

namespace detail {

inline Eigen::Matrix3d vma_lag1_first() {
  Eigen::Matrix3d m;
  m << 0.6, 0.0, 0.0,
       0.2, -0.6, 0.0,
       0.1, 0.2, 0.6;
  return m;
}

inline Eigen::Matrix3d vma_lag1_second() {
  Eigen::Matrix3d m;
  m << 0.6, 0.0, 0.0,
       0.2, 0.6, 0.0,
       -0.1, -0.2, -0.6;
  return m;
}

inline Eigen::Matrix3d vma_lag2_shared() {
  Eigen::Matrix3d m;
  m << 0.3, 0.0, 0.0,
       0.0, -0.3, 0.0,
       0.0, 0.0, 0.0;
  return m;
}

inline Eigen::Matrix3d vma_lag1_final() {
  Eigen::Matrix3d m;
  m << 1.32, 0.0, 0.0,
       0.2, -0.6, 0.0,
       0.1, 0.2, 0.6;
  return m;
}

inline Eigen::Matrix3d vma_lag2_final() {
  Eigen::Matrix3d m;
  m << -0.81, 0.0, 0.0,
       0.0, -0.3, 0.0,
       0.0, 0.0, 0.0;
  return m;
}

// Drifting 2×2 autoregressive block at rescaled time u = t/T.
inline Eigen::Matrix2d var_block(double u) {
  Eigen::Matrix2d m;
  m << -0.5 + u, 0.1,
       0.0, 0.7 - 1.4 * u;
  return m;
}

// I_{copies} ⊗ block
inline Eigen::MatrixXd block_diagonal(const Eigen::MatrixXd& block,
                                      int copies) {
  const Eigen::Index n = block.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * copies, n * copies);
  for (int c = 0; c < copies; ++c) out.block(c * n, c * n, n, n) = block;
  return out;
}

// Unit variances, constant pairwise correlation rho.
inline Eigen::MatrixXd equicorrelation(int p, double rho) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(p, p, rho);
  m.diagonal().setOnes();
  return m;
}

// Innovation covariance shared by the block VMA processes and the VAR:
// independent 3×3 equicorrelated groups.
inline Eigen::MatrixXd grouped_innovation_cov(int p) {
  return block_diagonal(equicorrelation(3, 0.5), p / 3);
}

}  // namespace detail

// ── Assembled process model ──────────────────────────────────────────────────

// One moving-average regime: X_t = ε_t + A₁ε_{t−1} + A₂ε_{t−2}, with ε drawn
// from the innovation stream named by `stream`.
struct VmaRegime {
  Eigen::MatrixXd ma1, ma2;
  int stream = 0;
};

struct ProcessModel {
  ProcessKind kind;
  int p = 0;
  std::int64_t t = 0;
  std::vector<std::int64_t> xi;          // 0 = ξ₀ < … < ξ_L = T
  std::vector<VmaRegime> regimes;        // one per segment (VMA kinds)
  std::vector<Eigen::MatrixXd> stream_cov;  // innovation covariances

  bool autoregressive() const { return kind == ProcessKind::slow_var; }
  int segments() const { return static_cast<int>(xi.size()) - 1; }

  // Segment covering rescaled time u, with segment z owning (ξ_z, ξ_{z+1}]/T
  // and the first segment also claiming u = 0.
  int segment_of(double u) const {
    int z = 0;
    while (z + 1 < segments() &&
           u > static_cast<double>(xi[z + 1]) / static_cast<double>(t))
      ++z;
    return z;
  }
};

inline ProcessModel build_model(const ProcessSpec& spec) {
  spec.validate();
  ProcessModel model;
  model.kind = spec.kind;
  model.p = spec.p;
  model.t = spec.t;
  model.xi.push_back(0);
  for (std::int64_t b : spec.change_points()) model.xi.push_back(b);
  model.xi.push_back(spec.t);
  for (std::size_t i = 1; i < model.xi.size(); ++i)
    if (model.xi[i] <= model.xi[i - 1])
      throw std::invalid_argument(
          "ProcessSpec: t is too short to hold distinct change points");

  const int copies = spec.p / 3;
  auto lift = [&](const Eigen::Matrix3d& block) {
    return detail::block_diagonal(block, copies);
  };
  switch (spec.kind) {
    case ProcessKind::piecewise_vma:
      model.stream_cov = {detail::grouped_innovation_cov(spec.p)};
      model.regimes = {
          {lift(detail::vma_lag1_first()), lift(detail::vma_lag2_shared()), 0},
          {lift(detail::vma_lag1_second()), lift(detail::vma_lag2_shared()),
           0}};
      break;
    case ProcessKind::stationary_vma:
      model.stream_cov = {detail::grouped_innovation_cov(spec.p)};
      model.regimes = {
          {lift(detail::vma_lag1_first()), lift(detail::vma_lag2_shared()),
           0}};
      break;
    case ProcessKind::four_segment_vma:
      model.stream_cov = {detail::equicorrelation(spec.p, 0.5),
                          detail::equicorrelation(spec.p, 0.9)};
      model.regimes = {
          {lift(detail::vma_lag1_first()), lift(detail::vma_lag2_shared()), 0},
          {lift(detail::vma_lag1_second()), lift(detail::vma_lag2_shared()),
           0},
          {lift(detail::vma_lag1_second()), lift(detail::vma_lag2_shared()),
           1},
          {lift(detail::vma_lag1_final()), lift(detail::vma_lag2_final()),
           1}};
      break;
    case ProcessKind::slow_var:
      model.stream_cov = {detail::grouped_innovation_cov(spec.p)};
      break;
  }
  return model;
}

// ── Simulation ───────────────────────────────────────────────────────────────

inline MultiSeries simulate(const ProcessSpec& spec) {
  const ProcessModel model = build_model(spec);
  const int p = spec.p;
  const std::int64_t t = spec.t;
  MultiSeries out;
  out.values.resize(p, t);
  out.channel_names.reserve(static_cast<std::size_t>(p));
  for (int pi = 0; pi < p; ++pi)
    out.channel_names.push_back("x" + std::to_string(pi + 1));

  Rng rng(spec.seed);
  auto standard_normal_block = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd z(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) z(r, c) = rng.normal();
    return z;
  };

  if (!model.autoregressive()) {
    // Innovation streams run over t = −1..T (two warm-up columns) so the
    // lagged terms are well defined from the first observation on, and each
    // regime reads its own stream at the lags it needs.
    std::vector<Eigen::MatrixXd> eps;
    for (const Eigen::MatrixXd& cov : model.stream_cov) {
      const Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("simulate: innovation covariance is not "
                                 "positive definite");
      eps.push_back(llt.matrixL() * standard_normal_block(p, t + 2));
    }
    for (int z = 0; z < model.segments(); ++z) {
      const VmaRegime& regime = model.regimes[static_cast<std::size_t>(z)];
      const Eigen::MatrixXd& e = eps[static_cast<std::size_t>(regime.stream)];
      const std::int64_t start = model.xi[static_cast<std::size_t>(z)];
      const std::int64_t len =
          model.xi[static_cast<std::size_t>(z) + 1] - start;
      // Observation t sits at stream column t+1.
      out.values.middleCols(start, len) =
          e.middleCols(start + 2, len) +
          regime.ma1 * e.middleCols(start + 1, len) +
          regime.ma2 * e.middleCols(start, len);
    }
    return out;
  }

  // Drifting autoregression: warm up from the zero state with the initial
  // coefficients, then run the time-varying recursion.
  const Eigen::LLT<Eigen::MatrixXd> llt(model.stream_cov[0]);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("simulate: innovation covariance is not "
                             "positive definite");
  const Eigen::MatrixXd chol_l = llt.matrixL();
  const int pairs = p / 2;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd next(p);
  auto step = [&](const Eigen::Matrix2d& theta) {
    const Eigen::VectorXd noise = chol_l * standard_normal_block(p, 1);
    for (int j = 0; j < pairs; ++j) {
      next(2 * j) = theta(0, 0) * x(2 * j) + theta(0, 1) * x(2 * j + 1) +
                    noise(2 * j);
      next(2 * j + 1) = theta(1, 1) * x(2 * j + 1) + noise(2 * j + 1);
    }
    x.swap(next);
  };
  const double dt = 1.0 / static_cast<double>(t);
  for (int burn = 0; burn < 200; ++burn) step(detail::var_block(dt));
  for (std::int64_t ti = 1; ti <= t; ++ti) {
    step(detail::var_block(static_cast<double>(ti) * dt));
    out.values.col(ti - 1) = x;
  }
  return out;
}

// ── Exact spectra ────────────────────────────────────────────────────────────

// Spectrum of X_t = ε_t + A₁ε_{t−1} + A₂ε_{t−2}, Var(ε) = Σ, at frequency
// ω in cycles per sample: f = ΦΣΦ* with Φ = I + A₁e^{−2πiω} + A₂e^{−4πiω}.
inline Eigen::MatrixXcd vma_spectrum(const Eigen::MatrixXd& ma1,
                                     const Eigen::MatrixXd& ma2,
                                     const Eigen::MatrixXd& sigma,
                                     double omega) {
  const std::complex<double> e1 =
      std::polar(1.0, -2.0 * M_PI * omega);
  const Eigen::MatrixXcd transfer =
      Eigen::MatrixXcd::Identity(ma1.rows(), ma1.cols()) +
      ma1.cast<std::complex<double>>() * e1 +
      ma2.cast<std::complex<double>>() * (e1 * e1);
  return transfer * sigma.cast<std::complex<double>>() * transfer.adjoint();
}

// Spectrum of X_t = Θ X_{t−1} + ε_t, Var(ε) = Σ: f = M⁻¹ΣM⁻* with
// M = I − Θe^{−2πiω}.
inline Eigen::MatrixXcd var_spectrum(const Eigen::MatrixXd& coef,
                                     const Eigen::MatrixXd& sigma,
                                     double omega) {
  const std::complex<double> e1 =
      std::polar(1.0, -2.0 * M_PI * omega);
  const Eigen::MatrixXcd m =
      Eigen::MatrixXcd::Identity(coef.rows(), coef.cols()) -
      coef.cast<std::complex<double>>() * e1;
  const Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
  if (!lu.isInvertible())
    throw std::runtime_error("var_spectrum: transfer matrix is singular");
  const Eigen::MatrixXcd inv = lu.inverse();
  return inv * sigma.cast<std::complex<double>>() * inv.adjoint();
}

inline Eigen::MatrixXcd true_spectrum(const ProcessModel& model, double u,
                                      double omega) {
  if (!(u >= 0.0 && u <= 1.0))
    throw std::invalid_argument("true_spectrum: u must lie in [0, 1]");
  if (!(omega >= 0.0 && omega <= 0.5))
    throw std::invalid_argument("true_spectrum: omega must lie in [0, 1/2]");
  if (model.autoregressive()) {
    const Eigen::MatrixXd theta =
        detail::block_diagonal(detail::var_block(u), model.p / 2);
    return var_spectrum(theta, model.stream_cov[0], omega);
  }
  const VmaRegime& regime =
      model.regimes[static_cast<std::size_t>(model.segment_of(u))];
  return vma_spectrum(regime.ma1, regime.ma2,
                      model.stream_cov[static_cast<std::size_t>(regime.stream)],
                      omega);
}

inline Eigen::MatrixXcd true_spectrum(const ProcessSpec& spec, double u,
                                      double omega) {
  return true_spectrum(build_model(spec), u, omega);
}

}  // namespace specfact
