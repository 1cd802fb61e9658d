/* metrics.hpp — integrated squared-error criteria against exact truth
 *
 * The headline number is the mean integrated squared error over the full
 * evaluation grid — every observation time t = 1..T and the frequencies
 * ω_k = k/T for k = 0..⌊(T−1)/2⌋ —
 *
 *   MISE = [T(K+1)]⁻¹ Σ_t Σ_k ‖f̂(t/T, ω_k) − f(t/T, ω_k)‖²_F,
 *
 * split exactly into a diagonal part (MISE_d, auto-spectra) and an
 * off-diagonal part (MISE_o, cross-spectra), so MISE = MISE_d + MISE_o to
 * rounding.  mise() compares two aligned dense grids; the *_vs_truth
 * variants stream over frequencies so the full T×(K+1) grid of P×P
 * matrices is never materialized — the posterior mean is accumulated
 * through a per-frequency difference array over time (each draw's spectrum
 * is constant within a segment), and the rolling-window estimate is
 * interpolated cell by cell.
 */
#pragma once

#include "specfact/estimator.hpp"
#include "specfact/rollwin.hpp"
#include "specfact/simulate.hpp"
#include "specfact/spectral_grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace specfact {

// ── Report types ─────────────────────────────────────────────────────────────

struct MiseReport {
  double mise = 0.0;
  double mise_d = 0.0;
  double mise_o = 0.0;
};

// Replicate collection with the moments the summary tables need.
struct MiseSummary {
  std::vector<MiseReport> replicates;

  MiseReport mean() const {
    MiseReport m;
    for (const MiseReport& r : replicates) {
      m.mise += r.mise;
      m.mise_d += r.mise_d;
      m.mise_o += r.mise_o;
    }
    const double n = static_cast<double>(replicates.size());
    if (n > 0) {
      m.mise /= n;
      m.mise_d /= n;
      m.mise_o /= n;
    }
    return m;
  }

  MiseReport stddev() const {
    MiseReport sd;
    const std::size_t n = replicates.size();
    if (n < 2) return sd;
    const MiseReport m = mean();
    for (const MiseReport& r : replicates) {
      sd.mise += (r.mise - m.mise) * (r.mise - m.mise);
      sd.mise_d += (r.mise_d - m.mise_d) * (r.mise_d - m.mise_d);
      sd.mise_o += (r.mise_o - m.mise_o) * (r.mise_o - m.mise_o);
    }
    const double denom = static_cast<double>(n - 1);
    sd.mise = std::sqrt(sd.mise / denom);
    sd.mise_d = std::sqrt(sd.mise_d / denom);
    sd.mise_o = std::sqrt(sd.mise_o / denom);
    return sd;
  }
};

// ── Evaluation grid ──────────────────────────────────────────────────────────

inline Eigen::VectorXd evaluation_times(std::int64_t t) {
  Eigen::VectorXd u(t);
  for (std::int64_t ti = 1; ti <= t; ++ti)
    u(ti - 1) = static_cast<double>(ti) / static_cast<double>(t);
  return u;
}

inline Eigen::VectorXd evaluation_frequencies(std::int64_t t) {
  const std::int64_t k_max = (t - 1) / 2;
  Eigen::VectorXd omega(k_max + 1);
  for (std::int64_t k = 0; k <= k_max; ++k)
    omega(k) = static_cast<double>(k) / static_cast<double>(t);
  return omega;
}

// ── Dense-grid comparison ────────────────────────────────────────────────────

inline MiseReport mise(const SpectralMatrixGrid& est,
                       const SpectralMatrixGrid& truth) {
  est.validate();
  truth.validate();
  if (!grids_aligned(est, truth))
    throw std::invalid_argument("mise: estimate and truth grids are not "
                                "aligned");
  MiseReport report;
  for (std::size_t c = 0; c < est.cells.size(); ++c) {
    const Eigen::MatrixXcd diff = est.cells[c] - truth.cells[c];
    const double diag = diff.diagonal().squaredNorm();
    report.mise_d += diag;
    report.mise_o += diff.squaredNorm() - diag;
  }
  const double cells = static_cast<double>(est.cells.size());
  report.mise_d /= cells;
  report.mise_o /= cells;
  report.mise = report.mise_d + report.mise_o;
  return report;
}

// Exact truth evaluated on an arbitrary grid.
inline SpectralMatrixGrid truth_grid(const ProcessModel& model,
                                     Eigen::VectorXd u_points,
                                     Eigen::VectorXd omega_points) {
  SpectralMatrixGrid grid = SpectralMatrixGrid::zeros(
      std::move(u_points), std::move(omega_points), model.p);
  for (Eigen::Index iu = 0; iu < grid.u.size(); ++iu)
    for (Eigen::Index iw = 0; iw < grid.omega.size(); ++iw)
      grid.at(iu, iw) = true_spectrum(model, grid.u(iu), grid.omega(iw));
  return grid;
}

// ── Streamed comparisons ─────────────────────────────────────────────────────

namespace detail {

// Fills `out` (p²×T, column t−1 = vec of the p×p matrix at time t) at one
// frequency.
using ProfileFiller =
    std::function<void(double omega, Eigen::MatrixXcd& out)>;

inline MiseReport mise_profiles(std::int64_t t, int p,
                                const ProfileFiller& est,
                                const ProfileFiller& truth) {
  const Eigen::VectorXd omega = evaluation_frequencies(t);
  Eigen::MatrixXcd est_cols(p * p, t);
  Eigen::MatrixXcd truth_cols(p * p, t);
  double sum_total = 0.0;
  double sum_diag = 0.0;
  for (Eigen::Index k = 0; k < omega.size(); ++k) {
    est(omega(k), est_cols);
    truth(omega(k), truth_cols);
    const Eigen::MatrixXcd diff = est_cols - truth_cols;
    sum_total += diff.squaredNorm();
    for (std::int64_t ti = 0; ti < t; ++ti)
      for (int pi = 0; pi < p; ++pi)
        sum_diag += std::norm(diff(pi * p + pi, ti));
  }
  const double cells =
      static_cast<double>(t) * static_cast<double>(omega.size());
  MiseReport report;
  report.mise_d = sum_diag / cells;
  report.mise_o = (sum_total - sum_diag) / cells;
  report.mise = report.mise_d + report.mise_o;
  return report;
}

}  // namespace detail

// The profile factories below borrow their arguments: the returned filler
// references the model / draw set / estimate, which must outlive it.

// Truth profile over the whole time axis at one frequency.
inline detail::ProfileFiller truth_profile(const ProcessModel& model) {
  return [&model](double omega, Eigen::MatrixXcd& out) {
    const std::int64_t t = model.t;
    const int p = model.p;
    if (!model.autoregressive()) {
      for (int z = 0; z < model.segments(); ++z) {
        const VmaRegime& regime = model.regimes[static_cast<std::size_t>(z)];
        const Eigen::MatrixXcd f = vma_spectrum(
            regime.ma1, regime.ma2,
            model.stream_cov[static_cast<std::size_t>(regime.stream)], omega);
        const Eigen::Map<const Eigen::VectorXcd> flat(f.data(), p * p);
        const std::int64_t a = model.xi[static_cast<std::size_t>(z)];
        const std::int64_t b = model.xi[static_cast<std::size_t>(z) + 1];
        for (std::int64_t ti = a; ti < b; ++ti) out.col(ti) = flat;
      }
      return;
    }
    for (std::int64_t ti = 1; ti <= t; ++ti) {
      const Eigen::MatrixXcd f = true_spectrum(
          model, static_cast<double>(ti) / static_cast<double>(t), omega);
      out.col(ti - 1) = Eigen::Map<const Eigen::VectorXcd>(f.data(), p * p);
    }
  };
}

// Posterior-mean profile: importance-weighted average of each draw's
// piecewise-constant spectrum, accumulated through a difference array in
// time and integrated by a prefix sum.
inline detail::ProfileFiller posterior_mean_profile(
    const std::vector<ArchivedDraw>& draws, std::int64_t t, int p) {
  if (draws.empty())
    throw std::invalid_argument("posterior_mean_profile: no draws");
  for (const ArchivedDraw& draw : draws) {
    if (draw.params.empty())
      throw std::invalid_argument(
          "posterior_mean_profile: draws lack stored parameters");
    if (draw.partition.xi.back() != t)
      throw std::invalid_argument(
          "posterior_mean_profile: draw partition length does not match t");
  }
  const Eigen::VectorXd weights = importance_weights(draws);
  return [&draws, weights, t, p](double omega, Eigen::MatrixXcd& out) {
    const int s =
        static_cast<int>(draws.front().params.front().alpha.rows());
    const BasisDesign design =
        build_design(Eigen::VectorXd::Constant(1, omega), s);
    Eigen::MatrixXcd diff = Eigen::MatrixXcd::Zero(p * p, t + 1);
    Eigen::MatrixXcd f(p, p);
    for (std::size_t j = 0; j < draws.size(); ++j) {
      const ArchivedDraw& draw = draws[j];
      const double w = weights(static_cast<Eigen::Index>(j));
      for (int z = 0; z < draw.partition.segments(); ++z) {
        const SegmentParams& seg = draw.params[static_cast<std::size_t>(z)];
        const int q = seg.q();
        Eigen::MatrixXcd lambda(p, q);
        for (int qi = 0; qi < q; ++qi)
          for (int pi = 0; pi < p; ++pi) {
            const int col = seg.coeff_col(pi, qi);
            lambda(pi, qi) = evaluate_loading(design, seg.alpha.col(col),
                                              seg.beta.col(col))(0);
          }
        f.noalias() = lambda * lambda.adjoint();
        f.diagonal() += draw.sigma2.cast<std::complex<double>>();
        const Eigen::Map<const Eigen::VectorXcd> flat(f.data(), p * p);
        const std::int64_t a = draw.partition.xi[static_cast<std::size_t>(z)];
        const std::int64_t b =
            draw.partition.xi[static_cast<std::size_t>(z) + 1];
        diff.col(a) += w * flat;
        diff.col(b) -= w * flat;
      }
    }
    Eigen::VectorXcd running = Eigen::VectorXcd::Zero(p * p);
    for (std::int64_t ti = 0; ti < t; ++ti) {
      running += diff.col(ti);
      out.col(ti) = running;
    }
  };
}

// Rolling-window profile: bilinear interpolation at every observation time.
inline detail::ProfileFiller rolling_profile(const RollingEstimate& est) {
  return [&est](double omega, Eigen::MatrixXcd& out) {
    const std::int64_t t = est.t;
    for (std::int64_t ti = 1; ti <= t; ++ti) {
      const Eigen::MatrixXcd f = est.at_point(
          static_cast<double>(ti) / static_cast<double>(t), omega);
      out.col(ti - 1) =
          Eigen::Map<const Eigen::VectorXcd>(f.data(), f.size());
    }
  };
}

inline MiseReport mise_posterior_vs_truth(
    const std::vector<ArchivedDraw>& draws, const ProcessModel& model) {
  return detail::mise_profiles(model.t, model.p,
                               posterior_mean_profile(draws, model.t, model.p),
                               truth_profile(model));
}

inline MiseReport mise_rolling_vs_truth(const RollingEstimate& est,
                                        const ProcessModel& model) {
  if (est.t != model.t)
    throw std::invalid_argument(
        "mise_rolling_vs_truth: estimate and truth lengths differ");
  return detail::mise_profiles(model.t, model.p, rolling_profile(est),
                               truth_profile(model));
}

// ── Report table ─────────────────────────────────────────────────────────────

// Rows are (setting, P, criterion) triples, columns estimator labels, cells
// "mean (sd)" strings; written as CSV.
struct MiseTable {
  std::vector<std::string> columns;
  struct Row {
    std::string setting;
    int p = 0;
    std::string criterion;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;

  void add_row(std::string setting, int p, std::string criterion,
               const std::vector<MiseSummary>& summaries,
               int criterion_index) {
    Row row;
    row.setting = std::move(setting);
    row.p = p;
    row.criterion = std::move(criterion);
    for (const MiseSummary& s : summaries) {
      const MiseReport m = s.mean();
      const MiseReport sd = s.stddev();
      const double mv = criterion_index == 0   ? m.mise
                        : criterion_index == 1 ? m.mise_d
                                               : m.mise_o;
      const double sv = criterion_index == 0   ? sd.mise
                        : criterion_index == 1 ? sd.mise_d
                                               : sd.mise_o;
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(3) << mv << " (" << sv << ")";
      row.cells.push_back(cell.str());
    }
    rows.push_back(std::move(row));
  }

  void write_csv(std::ostream& os) const {
    os << "setting,p,criterion";
    for (const std::string& c : columns) os << ',' << c;
    os << '\n';
    for (const Row& row : rows) {
      os << row.setting << ',' << row.p << ',' << row.criterion;
      for (const std::string& cell : row.cells) os << ',' << cell;
      os << '\n';
    }
  }
};

}  // namespace specfact
