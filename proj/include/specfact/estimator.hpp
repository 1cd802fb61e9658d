/* estimator.hpp — posterior spectral summaries averaged over partitions
 *
 * A retained draw j carries a partition, per-segment loading coefficients,
 * shared noise variances, and the weight vector ϑ at the time of the draw.
 * Because the chain visits model sizes near-uniformly by construction, raw
 * visit frequencies say little; every summary here reweights draw j by
 * w_j ∝ exp(ϑ_{j,L_j}), the self-normalized importance weight that undoes
 * the working target's e^{−ϑ_L} tilt.  When the stored weights are equal
 * across models the weights collapse to 1/n and every summary reduces to а
 * plain empirical average.
 *
 * The spectral summary is functional-first: the full P×P mean matrix field
 * is always produced (a weighted mean of Hermitian PSD matrices, hence
 * Hermitian PSD), while pointwise credible bands are computed only for the
 * scalar functionals the caller requests — log-spectra, squared coherences,
 * or linear diagonal power — keeping memory at draws × one grid row rather
 * than draws × grid × P².  Within one draw the spectrum is constant in u
 * across a segment, so the mean field accumulates through a difference
 * array over the u axis: each (draw, segment) adds at the first covered u
 * row and subtracts past the last, and a single prefix pass finishes the
 * field.
 */
#pragma once

#include "specfact/basis.hpp"
#include "specfact/chain_archive.hpp"
#include "specfact/partition.hpp"
#include "specfact/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace specfact {

// ── Importance weights and model probabilities ───────────────────────────────

// Normalized weights w_j ∝ exp(ϑ_{j,L_j}), max-subtracted for stability.
inline Eigen::VectorXd importance_weights(
    const std::vector<ArchivedDraw>& draws) {
  if (draws.empty())
    throw std::invalid_argument("importance_weights: no draws");
  Eigen::VectorXd log_w(draws.size());
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const int l = draws[j].partition.segments();
    if (l < 1 || l > draws[j].theta.size())
      throw std::invalid_argument(
          "importance_weights: draw model size outside its weight vector");
    log_w(static_cast<Eigen::Index>(j)) = draws[j].theta(l - 1);
  }
  log_w.array() -= log_w.maxCoeff();
  Eigen::VectorXd w = log_w.array().exp();
  w /= w.sum();
  return w;
}

// P̂(L = ℓ | X) for ℓ = 1..l_max as a reweighted frequency vector.
inline Eigen::VectorXd model_probabilities(
    const std::vector<ArchivedDraw>& draws, int l_max) {
  const Eigen::VectorXd w = importance_weights(draws);
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(l_max);
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const int l = draws[j].partition.segments();
    if (l > l_max)
      throw std::invalid_argument(
          "model_probabilities: draw has more segments than l_max");
    probs(l - 1) += w(static_cast<Eigen::Index>(j));
  }
  return probs;
}

// Posterior probability that each time point is an interior partition point;
// entry t of the result holds Σ_j w_j · 1[t ∈ interior(Ξ_j)], t = 0..T.
inline Eigen::VectorXd breakpoint_probability(
    const std::vector<ArchivedDraw>& draws, std::int64_t total_length) {
  const Eigen::VectorXd w = importance_weights(draws);
  Eigen::VectorXd density = Eigen::VectorXd::Zero(total_length + 1);
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const auto& xi = draws[j].partition.xi;
    if (xi.back() != total_length)
      throw std::invalid_argument(
          "breakpoint_probability: draw partition length mismatch");
    for (std::size_t i = 1; i + 1 < xi.size(); ++i)
      density(xi[i]) += w(static_cast<Eigen::Index>(j));
  }
  return density;
}

// ── Grids and functionals ────────────────────────────────────────────────────

struct SummaryGrids {
  Eigen::VectorXd u;      // rescaled times in (0, 1)
  Eigen::VectorXd omega;  // frequencies in (0, 1/2]

  static SummaryGrids defaults(int n_u = 100, int n_omega = 128) {
    if (n_u < 1 || n_omega < 1)
      throw std::invalid_argument("SummaryGrids: grids must be nonempty");
    SummaryGrids grids;
    grids.u.resize(n_u);
    for (int i = 0; i < n_u; ++i)
      grids.u(i) = (i + 0.5) / static_cast<double>(n_u);
    grids.omega.resize(n_omega);
    for (int k = 0; k < n_omega; ++k)
      grids.omega(k) = 0.5 * (k + 1) / static_cast<double>(n_omega);
    return grids;
  }
};

// Scalar functionals of the spectral matrix that support credible bands.
enum class FunctionalKind {
  log_spectrum,   // log f_aa(u, ω)
  spectrum,       // f_aa(u, ω)
  coherence,      // ρ²_ab(u, ω)
};

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::log_spectrum;
  int a = 0;
  int b = 0;  // second channel, coherence only

  std::string label() const {
    switch (kind) {
      case FunctionalKind::log_spectrum:
        return "log_spectrum_" + std::to_string(a);
      case FunctionalKind::spectrum:
        return "spectrum_" + std::to_string(a);
      case FunctionalKind::coherence:
        return "coherence_" + std::to_string(a) + "_" + std::to_string(b);
    }
    return "unknown";
  }
};

inline double evaluate_functional(const FunctionalSpec& spec,
                                  const Eigen::MatrixXcd& f) {
  switch (spec.kind) {
    case FunctionalKind::log_spectrum:
      return std::log(f(spec.a, spec.a).real());
    case FunctionalKind::spectrum:
      return f(spec.a, spec.a).real();
    case FunctionalKind::coherence: {
      const double denom =
          f(spec.a, spec.a).real() * f(spec.b, spec.b).real();
      return std::norm(f(spec.a, spec.b)) / denom;
    }
  }
  throw std::logic_error("evaluate_functional: unhandled kind");
}

struct FunctionalSummary {
  FunctionalSpec spec;
  Eigen::MatrixXd mean;   // n_u × n_ω weighted mean of the functional draws
  Eigen::MatrixXd lower;  // 2.5% weighted percentile
  Eigen::MatrixXd upper;  // 97.5% weighted percentile
};

// ── Posterior summary ────────────────────────────────────────────────────────

struct PosteriorSummary {
  SummaryGrids grids;
  int channels = 0;
  std::vector<Eigen::MatrixXcd> mean;  // cell (iu, iω) at iu·n_ω + iω
  Eigen::VectorXd model_probs;
  Eigen::VectorXd breakpoints;  // interior-point probability per time index
  std::vector<FunctionalSummary> functionals;

  const Eigen::MatrixXcd& mean_at(int iu, int iw) const {
    return mean[static_cast<std::size_t>(iu) * grids.omega.size() + iw];
  }
};

namespace detail {

// Left-continuous inverse CDF of a weighted sample at two probabilities,
// sharing a single sort.
inline void weighted_band(const std::vector<double>& values,
                          const std::vector<double>& weights,
                          std::vector<int>& order, double q_lo, double q_hi,
                          double& lo, double& hi) {
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return values[static_cast<std::size_t>(i)] <
           values[static_cast<std::size_t>(j)];
  });
  double cum = 0.0;
  bool have_lo = false;
  lo = hi = values[static_cast<std::size_t>(order.back())];
  for (const int i : order) {
    cum += weights[static_cast<std::size_t>(i)];
    if (!have_lo && cum >= q_lo) {
      lo = values[static_cast<std::size_t>(i)];
      have_lo = true;
    }
    if (cum >= q_hi) {
      hi = values[static_cast<std::size_t>(i)];
      break;
    }
  }
}

// First u index whose grid value exceeds the rescaled boundary, i.e. the
// start of the half-open index range covered by a segment beginning there.
inline int u_range_start(const Eigen::VectorXd& u_grid, double boundary) {
  const double* begin = u_grid.data();
  const double* end = begin + u_grid.size();
  return static_cast<int>(std::upper_bound(begin, end, boundary) - begin);
}

}  // namespace detail

// Spectral summary over the requested grids, reweighted over the partition
// distribution.  Draws must carry per-segment parameters; the loading curves
// are re-evaluated on the frequency grid, so any grid works regardless of
// the segment lengths seen by the sampler.
inline PosteriorSummary posterior_spectrum(
    const std::vector<ArchivedDraw>& draws, int l_max,
    std::int64_t total_length, const SummaryGrids& grids,
    const std::vector<FunctionalSpec>& functionals = {}) {
  if (draws.empty())
    throw std::invalid_argument("posterior_spectrum: no draws");
  for (const ArchivedDraw& draw : draws)
    if (draw.params.empty())
      throw std::invalid_argument(
          "posterior_spectrum: draws lack segment parameters");

  const int p = static_cast<int>(draws.front().sigma2.size());
  const int s = static_cast<int>(draws.front().params.front().alpha.rows());
  const int n_u = static_cast<int>(grids.u.size());
  const int n_w = static_cast<int>(grids.omega.size());
  const Eigen::VectorXd w = importance_weights(draws);

  PosteriorSummary summary;
  summary.grids = grids;
  summary.channels = p;
  summary.model_probs = model_probabilities(draws, l_max);
  summary.breakpoints = breakpoint_probability(draws, total_length);

  const BasisDesign design = build_design(grids.omega, s);

  // Difference field over u: one extra row absorbs the subtractions.
  std::vector<Eigen::MatrixXcd> field(
      static_cast<std::size_t>(n_u + 1) * n_w,
      Eigen::MatrixXcd::Zero(p, p));
  auto field_at = [&](int iu, int iw) -> Eigen::MatrixXcd& {
    return field[static_cast<std::size_t>(iu) * n_w + iw];
  };

  // Per-draw, per-segment functional tables for the credible bands:
  // tables[fi][j] is (segments of draw j) × n_ω.
  std::vector<std::vector<Eigen::MatrixXd>> tables(functionals.size());
  for (auto& table : tables) table.resize(draws.size());

  for (std::size_t j = 0; j < draws.size(); ++j) {
    const ArchivedDraw& draw = draws[j];
    const double weight = w(static_cast<Eigen::Index>(j));
    const int l = draw.partition.segments();
    if (draw.partition.xi.back() != total_length)
      throw std::invalid_argument(
          "posterior_spectrum: draw partition length mismatch");
    for (std::size_t fi = 0; fi < functionals.size(); ++fi)
      tables[fi][j].resize(l, n_w);

    for (int z = 0; z < l; ++z) {
      const SegmentParams& seg = draw.params[z];
      // Loading curves on the frequency grid for this segment.
      Eigen::MatrixXcd lambda_flat(p * seg.q(), n_w);
      for (int qi = 0; qi < seg.q(); ++qi)
        for (int pi = 0; pi < p; ++pi) {
          const int col = seg.coeff_col(pi, qi);
          lambda_flat.row(qi * p + pi) =
              evaluate_loading(design, seg.alpha.col(col), seg.beta.col(col))
                  .transpose();
        }

      const int iu_start = detail::u_range_start(
          grids.u, static_cast<double>(draw.partition.xi[z]) /
                       static_cast<double>(total_length));
      const int iu_end = detail::u_range_start(
          grids.u, static_cast<double>(draw.partition.xi[z + 1]) /
                       static_cast<double>(total_length));

      for (int iw = 0; iw < n_w; ++iw) {
        const Eigen::Map<const Eigen::MatrixXcd> lambda(
            lambda_flat.data() +
                static_cast<std::ptrdiff_t>(iw) * lambda_flat.rows(),
            p, seg.q());
        Eigen::MatrixXcd f = lambda * lambda.adjoint();
        f.diagonal() += draw.sigma2.cast<std::complex<double>>();
        for (std::size_t fi = 0; fi < functionals.size(); ++fi)
          tables[fi][j](z, iw) = evaluate_functional(functionals[fi], f);
        if (iu_start < iu_end) {
          field_at(iu_start, iw) += weight * f;
          field_at(iu_end, iw) -= weight * f;
        }
      }
    }
  }

  // Prefix pass over u completes the mean field.
  summary.mean.assign(static_cast<std::size_t>(n_u) * n_w,
                      Eigen::MatrixXcd::Zero(p, p));
  for (int iw = 0; iw < n_w; ++iw) {
    Eigen::MatrixXcd running = Eigen::MatrixXcd::Zero(p, p);
    for (int iu = 0; iu < n_u; ++iu) {
      running += field_at(iu, iw);
      summary.mean[static_cast<std::size_t>(iu) * n_w + iw] = running;
    }
  }

  // Credible bands per functional, one u row at a time.  The segment that
  // covers a u row is the same for every frequency, so it is resolved once
  // per (row, draw).
  const std::vector<double> weight_vec(w.data(), w.data() + w.size());
  std::vector<double> cell(draws.size());
  std::vector<int> order(draws.size());
  std::vector<int> row_segment(draws.size());
  for (std::size_t fi = 0; fi < functionals.size(); ++fi) {
    FunctionalSummary fs;
    fs.spec = functionals[fi];
    fs.mean.resize(n_u, n_w);
    fs.lower.resize(n_u, n_w);
    fs.upper.resize(n_u, n_w);
    for (int iu = 0; iu < n_u; ++iu) {
      for (std::size_t j = 0; j < draws.size(); ++j) {
        const auto& xi = draws[j].partition.xi;
        int z = 0;
        while (static_cast<double>(xi[z + 1]) /
                   static_cast<double>(total_length) <
               grids.u(iu))
          ++z;
        row_segment[j] = z;
      }
      for (int iw = 0; iw < n_w; ++iw) {
        double mean_acc = 0.0;
        for (std::size_t j = 0; j < draws.size(); ++j) {
          cell[j] = tables[fi][j](row_segment[j], iw);
          mean_acc += weight_vec[j] * cell[j];
        }
        std::iota(order.begin(), order.end(), 0);
        fs.mean(iu, iw) = mean_acc;
        detail::weighted_band(cell, weight_vec, order, 0.025, 0.975,
                              fs.lower(iu, iw), fs.upper(iu, iw));
      }
    }
    summary.functionals.push_back(std::move(fs));
  }

  return summary;
}

// Convenience overload reading a whole archive.
inline PosteriorSummary posterior_spectrum(
    ChainArchiveReader& reader, const SummaryGrids& grids,
    const std::vector<FunctionalSpec>& functionals = {}) {
  const std::vector<ArchivedDraw> draws = reader.read_all();
  if (draws.empty())
    throw std::invalid_argument("posterior_spectrum: archive holds no draws");
  return posterior_spectrum(draws, reader.header().l_max, reader.header().t,
                            grids, functionals);
}

// Default functional set: every channel's log-spectrum.
inline std::vector<FunctionalSpec> default_functionals(int p) {
  std::vector<FunctionalSpec> specs;
  for (int pi = 0; pi < p; ++pi)
    specs.push_back({FunctionalKind::log_spectrum, pi, 0});
  return specs;
}

}  // namespace specfact
