/* Error-metric checks.
 *
 * The dense-grid comparison is pinned by construction examples (zero error,
 * pure-diagonal perturbations, the exact diagonal/off-diagonal split), and
 * every streamed variant is cross-validated against the dense path on small
 * grids where both are affordable: the rolling-window interpolation, the
 * per-time truth of the drifting autoregression, and the difference-array
 * accumulation of the posterior mean against a direct per-time assembly.
 */
#include <catch2/catch_amalgamated.hpp>

#include "specfact/basis.hpp"
#include "specfact/metrics.hpp"
#include "specfact/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

namespace {

using namespace specfact;

SpectralMatrixGrid random_hermitian_grid(int nu, int nw, int p,
                                         std::uint64_t seed) {
  Rng rng(seed);
  SpectralMatrixGrid grid = SpectralMatrixGrid::zeros(
      Eigen::VectorXd::LinSpaced(nu, 0.1, 1.0),
      Eigen::VectorXd::LinSpaced(nw, 0.0, 0.5), p);
  for (Eigen::MatrixXcd& cell : grid.cells) {
    Eigen::MatrixXcd raw(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        raw(i, j) = std::complex<double>(rng.normal(), rng.normal());
    cell = raw + raw.adjoint();
  }
  return grid;
}

ArchivedDraw flat_theta_draw(int p, int q, int s,
                             const std::vector<std::int64_t>& xi,
                             double coeff_seed) {
  ArchivedDraw draw;
  draw.partition.xi = xi;
  draw.sigma2 = Eigen::VectorXd::Constant(p, 0.8);
  draw.g_eps = Eigen::VectorXd::Ones(p);
  draw.theta = Eigen::VectorXd::Zero(2);
  Rng rng(static_cast<std::uint64_t>(coeff_seed * 100) + 5);
  for (int z = 0; z + 1 < static_cast<int>(xi.size()); ++z) {
    SegmentParams seg = SegmentParams::init(p, q, s, 1);
    for (int col = 0; col < seg.alpha.cols(); ++col)
      for (int row = 0; row < s; ++row) {
        seg.alpha(row, col) = coeff_seed * 0.3 + 0.2 * rng.normal();
        seg.beta(row, col) = 0.1 * coeff_seed + 0.1 * rng.normal();
      }
    seg.factors.resize(0, 0);
    draw.params.push_back(std::move(seg));
  }
  return draw;
}

}  // namespace

TEST_CASE("grid comparison obeys the construction identities") {
  ProcessSpec spec;
  spec.kind = ProcessKind::stationary_vma;
  spec.p = 3;
  spec.t = 64;
  const ProcessModel model = build_model(spec);
  const SpectralMatrixGrid truth =
      truth_grid(model, evaluation_times(8), evaluation_frequencies(8));

  SECTION("identical grids give zero error") {
    const MiseReport report = mise(truth, truth);
    CHECK(report.mise == 0.0);
    CHECK(report.mise_d == 0.0);
    CHECK(report.mise_o == 0.0);
  }

  SECTION("diagonal perturbations land entirely in the diagonal part") {
    SpectralMatrixGrid est = truth;
    const double c = 0.37;
    for (Eigen::MatrixXcd& cell : est.cells)
      cell += c * Eigen::MatrixXcd::Identity(3, 3);
    const MiseReport report = mise(est, truth);
    CHECK_THAT(report.mise_d, Catch::Matchers::WithinAbs(3.0 * c * c, 1e-12));
    CHECK_THAT(report.mise_o, Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(report.mise, Catch::Matchers::WithinAbs(3.0 * c * c, 1e-12));
  }

  SECTION("decomposition identity on random grids") {
    const SpectralMatrixGrid a = random_hermitian_grid(4, 5, 3, 11);
    const SpectralMatrixGrid b = random_hermitian_grid(4, 5, 3, 12);
    const MiseReport report = mise(a, b);
    CHECK(report.mise > 0.0);
    CHECK_THAT(report.mise,
               Catch::Matchers::WithinAbs(report.mise_d + report.mise_o,
                                          1e-12));
  }

  SECTION("simultaneous channel permutation leaves the error unchanged") {
    const SpectralMatrixGrid a = random_hermitian_grid(3, 4, 3, 21);
    const SpectralMatrixGrid b = random_hermitian_grid(3, 4, 3, 22);
    const int perm[3] = {2, 0, 1};
    SpectralMatrixGrid pa = a, pb = b;
    for (std::size_t c = 0; c < a.cells.size(); ++c)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          pa.cells[c](i, j) = a.cells[c](perm[i], perm[j]);
          pb.cells[c](i, j) = b.cells[c](perm[i], perm[j]);
        }
    const MiseReport plain = mise(a, b);
    const MiseReport permuted = mise(pa, pb);
    CHECK_THAT(permuted.mise, Catch::Matchers::WithinAbs(plain.mise, 1e-12));
    CHECK_THAT(permuted.mise_d,
               Catch::Matchers::WithinAbs(plain.mise_d, 1e-12));
    CHECK_THAT(permuted.mise_o,
               Catch::Matchers::WithinAbs(plain.mise_o, 1e-12));
  }

  SECTION("misaligned grids are rejected") {
    SpectralMatrixGrid other = truth;
    other.u.array() += 0.01;
    CHECK_THROWS_AS(mise(other, truth), std::invalid_argument);
    SpectralMatrixGrid broken = truth;
    broken.cells.pop_back();
    CHECK_THROWS_AS(mise(broken, truth), std::invalid_argument);
  }
}

TEST_CASE("evaluation grid covers every time and frequency including zero") {
  const Eigen::VectorXd u = evaluation_times(4);
  REQUIRE(u.size() == 4);
  CHECK(u(0) == 0.25);
  CHECK(u(3) == 1.0);
  const Eigen::VectorXd w100 = evaluation_frequencies(100);
  REQUIRE(w100.size() == 50);  // k = 0..49
  CHECK(w100(0) == 0.0);
  CHECK(w100(49) == 0.49);
  const Eigen::VectorXd w101 = evaluation_frequencies(101);
  REQUIRE(w101.size() == 51);
  CHECK_THAT(w101(50), Catch::Matchers::WithinAbs(50.0 / 101.0, 1e-15));
}

TEST_CASE("streamed comparisons agree with the dense path") {
  SECTION("rolling window against block-regime truth") {
    ProcessSpec spec;
    spec.kind = ProcessKind::piecewise_vma;
    spec.p = 3;
    spec.t = 64;
    spec.seed = 5;
    const ProcessModel model = build_model(spec);
    const Eigen::MatrixXd values = simulate(spec).values;
    RollConfig cfg;
    cfg.block = 32;
    const RollingEstimate est = rolling_window_estimate(values, cfg);
    const MiseReport streamed = mise_rolling_vs_truth(est, model);
    const SpectralMatrixGrid dense_est =
        est.to_grid(evaluation_times(64), evaluation_frequencies(64));
    const SpectralMatrixGrid dense_truth =
        truth_grid(model, evaluation_times(64), evaluation_frequencies(64));
    const MiseReport dense = mise(dense_est, dense_truth);
    CHECK_THAT(streamed.mise, Catch::Matchers::WithinAbs(dense.mise, 1e-12));
    CHECK_THAT(streamed.mise_d,
               Catch::Matchers::WithinAbs(dense.mise_d, 1e-12));
    CHECK_THAT(streamed.mise_o,
               Catch::Matchers::WithinAbs(dense.mise_o, 1e-12));
    CHECK(streamed.mise > 0.0);
  }

  SECTION("per-time truth of the drifting autoregression") {
    ProcessSpec spec;
    spec.kind = ProcessKind::slow_var;
    spec.p = 6;
    spec.t = 32;
    spec.seed = 6;
    const ProcessModel model = build_model(spec);
    const Eigen::MatrixXd values = simulate(spec).values;
    RollConfig cfg;
    cfg.block = 16;
    cfg.spans = {5, 7};
    const RollingEstimate est = rolling_window_estimate(values, cfg);
    const MiseReport streamed = mise_rolling_vs_truth(est, model);
    const MiseReport dense = mise(
        est.to_grid(evaluation_times(32), evaluation_frequencies(32)),
        truth_grid(model, evaluation_times(32), evaluation_frequencies(32)));
    CHECK_THAT(streamed.mise, Catch::Matchers::WithinAbs(dense.mise, 1e-12));
    CHECK_THAT(streamed.mise_o,
               Catch::Matchers::WithinAbs(dense.mise_o, 1e-12));
  }

  SECTION("posterior mean difference array against direct assembly") {
    const int p = 3, q = 1, s = 3;
    const std::int64_t t = 32;
    ProcessSpec spec;
    spec.kind = ProcessKind::stationary_vma;
    spec.p = p;
    spec.t = t;
    const ProcessModel model = build_model(spec);
    std::vector<ArchivedDraw> draws;
    draws.push_back(flat_theta_draw(p, q, s, {0, t}, 1.0));
    draws.push_back(flat_theta_draw(p, q, s, {0, 16, t}, -1.5));
    draws.push_back(flat_theta_draw(p, q, s, {0, 10, t}, 0.4));
    const MiseReport streamed = mise_posterior_vs_truth(draws, model);

    // Direct assembly: equal weights (flat tilt vectors), the pointwise
    // loading evaluator, and an explicit segment lookup per time.
    const Eigen::VectorXd u_pts = evaluation_times(t);
    const Eigen::VectorXd w_pts = evaluation_frequencies(t);
    SpectralMatrixGrid mean_grid = SpectralMatrixGrid::zeros(u_pts, w_pts, p);
    for (Eigen::Index iu = 0; iu < u_pts.size(); ++iu)
      for (Eigen::Index iw = 0; iw < w_pts.size(); ++iw) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(p, p);
        for (const ArchivedDraw& draw : draws) {
          const std::int64_t ti = iu + 1;
          int z = 0;
          while (draw.partition.xi[static_cast<std::size_t>(z) + 1] < ti) ++z;
          const SegmentParams& seg = draw.params[static_cast<std::size_t>(z)];
          Eigen::MatrixXcd lambda(p, q);
          for (int qi = 0; qi < q; ++qi)
            for (int pi = 0; pi < p; ++pi) {
              const int col = seg.coeff_col(pi, qi);
              lambda(pi, qi) = loading_at(w_pts(iw), seg.alpha.col(col),
                                          seg.beta.col(col));
            }
          Eigen::MatrixXcd f = lambda * lambda.adjoint();
          f.diagonal() += draw.sigma2.cast<std::complex<double>>();
          acc += f / static_cast<double>(draws.size());
        }
        mean_grid.at(iu, iw) = acc;
      }
    const MiseReport dense =
        mise(mean_grid, truth_grid(model, u_pts, w_pts));
    CHECK_THAT(streamed.mise, Catch::Matchers::WithinAbs(dense.mise, 1e-10));
    CHECK_THAT(streamed.mise_d,
               Catch::Matchers::WithinAbs(dense.mise_d, 1e-10));
    CHECK_THAT(streamed.mise_o,
               Catch::Matchers::WithinAbs(dense.mise_o, 1e-10));
  }

  SECTION("mismatched inputs are rejected") {
    ProcessSpec spec;
    spec.kind = ProcessKind::stationary_vma;
    spec.p = 3;
    spec.t = 32;
    const ProcessModel model = build_model(spec);
    std::vector<ArchivedDraw> draws;
    CHECK_THROWS_AS(mise_posterior_vs_truth(draws, model),
                    std::invalid_argument);
    draws.push_back(flat_theta_draw(3, 1, 3, {0, 64}, 1.0));
    CHECK_THROWS_AS(mise_posterior_vs_truth(draws, model),
                    std::invalid_argument);  // partition length 64 ≠ 32
    draws[0].partition.xi = {0, 32};
    draws[0].params.clear();
    CHECK_THROWS_AS(mise_posterior_vs_truth(draws, model),
                    std::invalid_argument);
    RollingEstimate est;
    est.t = 64;
    CHECK_THROWS_AS(mise_rolling_vs_truth(est, model), std::invalid_argument);
  }
}

TEST_CASE("replicate summaries and the report table") {
  MiseSummary summary;
  summary.replicates = {{1.0, 0.5, 0.5}, {2.0, 1.0, 1.0}, {3.0, 1.5, 1.5}};
  const MiseReport mean = summary.mean();
  CHECK_THAT(mean.mise, Catch::Matchers::WithinAbs(2.0, 1e-15));
  CHECK_THAT(mean.mise_d, Catch::Matchers::WithinAbs(1.0, 1e-15));
  const MiseReport sd = summary.stddev();
  CHECK_THAT(sd.mise, Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(sd.mise_o, Catch::Matchers::WithinAbs(0.5, 1e-15));

  MiseTable table;
  table.columns = {"B=64", "Q=8"};
  MiseSummary col2;
  col2.replicates = {{4.0, 2.0, 2.0}, {6.0, 3.0, 3.0}};
  table.add_row("piecewise", 24, "MISE", {summary, col2}, 0);
  table.add_row("piecewise", 24, "MISE_o", {summary, col2}, 2);
  std::ostringstream os;
  table.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.find("setting,p,criterion,B=64,Q=8") == 0);
  CHECK(csv.find("piecewise,24,MISE,2.000 (1.000),5.000 (1.414)") !=
        std::string::npos);
  CHECK(csv.find("piecewise,24,MISE_o,1.000 (0.500),2.500 (0.707)") !=
        std::string::npos);
}
