/* Rolling-window estimator checks.
 *
 * A brute-force reimplementation of the circularly smoothed periodogram and
 * the GCV score checks the production path on small blocks, the span-one
 * configuration must reproduce raw periodograms exactly, white noise pins
 * the absolute spectral level, and the interpolation rules are checked on a
 * hand-built estimate with known cell values.
 */
#include <catch2/catch_amalgamated.hpp>

#include "specfact/rng.hpp"
#include "specfact/rollwin.hpp"
#include "specfact/simulate.hpp"
#include "specfact/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <vector>

namespace {

using namespace specfact;

Eigen::MatrixXd noise_matrix(int p, std::int64_t t, std::uint64_t seed,
                             const Eigen::VectorXd& scale) {
  Rng rng(seed);
  Eigen::MatrixXd values(p, t);
  for (std::int64_t ti = 0; ti < t; ++ti)
    for (int pi = 0; pi < p; ++pi)
      values(pi, ti) = scale(pi) * rng.normal();
  return values;
}

// Two-sided periodograms of one block, straight from the definition.
std::vector<Eigen::MatrixXcd> brute_periodograms(const Eigen::MatrixXd& values,
                                                 std::int64_t start,
                                                 std::int64_t block) {
  const Eigen::MatrixXcd dft = full_dft(values, start, start + block);
  std::vector<Eigen::MatrixXcd> out;
  for (std::int64_t k = 0; k < block; ++k)
    out.push_back(dft.row(k).transpose() * dft.row(k).conjugate());
  return out;
}

// Circular running mean of span m at one-sided index k.
Eigen::MatrixXcd brute_smooth(const std::vector<Eigen::MatrixXcd>& pg,
                              std::int64_t k, int m) {
  const std::int64_t b = static_cast<std::int64_t>(pg.size());
  const std::int64_t h = (m - 1) / 2;
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(pg[0].rows(), pg[0].cols());
  for (std::int64_t j = k - h; j <= k + h; ++j)
    sum += pg[static_cast<std::size_t>(((j % b) + b) % b)];
  return sum / static_cast<double>(m);
}

}  // namespace

TEST_CASE("configuration and span candidates") {
  SECTION("validation") {
    RollConfig cfg;
    cfg.block = 63;
    CHECK_THROWS_AS(cfg.validate(1000), std::invalid_argument);
    cfg.block = 64;
    CHECK_NOTHROW(cfg.validate(1000));
    CHECK_THROWS_AS(cfg.validate(63), std::invalid_argument);
    cfg.overlap = 1.0;
    CHECK_THROWS_AS(cfg.validate(1000), std::invalid_argument);
    cfg.overlap = 0.5;
    cfg.spans = {4};
    CHECK_THROWS_AS(cfg.validate(1000), std::invalid_argument);
    cfg.spans = {5};
    CHECK_NOTHROW(cfg.validate(1000));
  }

  SECTION("default spans start above the channel count") {
    CHECK(specfact::detail::default_spans(12, 256) ==
          std::vector<int>({13, 21, 29}));
    CHECK(specfact::detail::default_spans(12, 64) == std::vector<int>({13}));
    CHECK(specfact::detail::default_spans(3, 256) ==
          std::vector<int>({5, 13, 21, 29}));
    CHECK(specfact::detail::default_spans(12, 16).empty());
  }

  SECTION("infeasible spans are an error") {
    const Eigen::MatrixXd values =
        noise_matrix(12, 64, 3, Eigen::VectorXd::Ones(12));
    RollConfig cfg;
    cfg.block = 16;  // K = 8 < 13: no default span fits
    CHECK_THROWS_AS(rolling_window_estimate(values, cfg), std::runtime_error);
    cfg.spans = {21};  // explicit but too wide for the block
    CHECK_THROWS_AS(rolling_window_estimate(values, cfg), std::runtime_error);
  }

  SECTION("block layout covers the series end") {
    const std::vector<std::int64_t> starts =
        specfact::detail::block_starts(100, 64, 0.5);
    CHECK(starts == std::vector<std::int64_t>({0, 32, 36}));
    CHECK(specfact::detail::block_starts(128, 64, 0.5) ==
          std::vector<std::int64_t>({0, 32, 64}));
    CHECK(specfact::detail::block_starts(64, 64, 0.5) ==
          std::vector<std::int64_t>({0}));
  }
}

TEST_CASE("span one reproduces the raw periodogram") {
  const Eigen::VectorXd scale = (Eigen::VectorXd(2) << 1.0, 2.0).finished();
  const Eigen::MatrixXd values = noise_matrix(2, 96, 17, scale);
  RollConfig cfg;
  cfg.block = 32;
  cfg.spans = {1};
  const RollingEstimate est = rolling_window_estimate(values, cfg);
  REQUIRE(est.blocks() == 5);
  for (int span : est.chosen_span) CHECK(span == 1);
  for (int ib = 0; ib < est.blocks(); ++ib) {
    const std::int64_t start = ib < 4 ? 16 * ib : 64;
    const std::vector<Eigen::MatrixXcd> pg =
        brute_periodograms(values, start, 32);
    for (std::int64_t k = 0; k <= 16; ++k)
      CHECK((est.at(ib, k) - pg[static_cast<std::size_t>(k)])
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }
}

TEST_CASE("GCV selection matches a brute-force rescoring") {
  ProcessSpec spec;
  spec.kind = ProcessKind::stationary_vma;
  spec.p = 3;
  spec.t = 256;
  spec.seed = 31;
  const Eigen::MatrixXd values = simulate(spec).values;
  RollConfig cfg;
  cfg.block = 64;
  cfg.spans = {3, 7, 11, 15};
  const RollingEstimate est = rolling_window_estimate(values, cfg);

  for (int ib = 0; ib < est.blocks(); ++ib) {
    const std::int64_t start = 32 * ib;
    const std::vector<Eigen::MatrixXcd> pg =
        brute_periodograms(values, start, 64);
    double best_score = std::numeric_limits<double>::infinity();
    int best_span = 0;
    for (int m : cfg.spans) {
      double residual = 0.0;
      for (std::int64_t k = 0; k <= 32; ++k)
        residual += (pg[static_cast<std::size_t>(k)] - brute_smooth(pg, k, m))
                        .squaredNorm();
      const double score =
          residual / 33.0 / std::pow(1.0 - 1.0 / m, 2.0);
      if (score < best_score) {
        best_score = score;
        best_span = m;
      }
    }
    CHECK(est.chosen_span[static_cast<std::size_t>(ib)] == best_span);
    for (std::int64_t k = 0; k <= 32; ++k)
      CHECK((est.at(ib, k) - brute_smooth(pg, k, best_span))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }
}

TEST_CASE("estimates are Hermitian and positive semidefinite") {
  ProcessSpec spec;
  spec.kind = ProcessKind::piecewise_vma;
  spec.p = 3;
  spec.t = 512;
  spec.seed = 77;
  const Eigen::MatrixXd values = simulate(spec).values;
  for (const bool taper : {false, true}) {
    RollConfig cfg;
    cfg.block = 128;
    cfg.taper = taper;
    const RollingEstimate est = rolling_window_estimate(values, cfg);
    for (int ib = 0; ib < est.blocks(); ++ib) {
      CHECK(est.chosen_span[static_cast<std::size_t>(ib)] >= spec.p);
      for (Eigen::Index k = 0; k < est.omega.size(); ++k) {
        const Eigen::MatrixXcd& f = est.at(ib, k);
        CHECK((f - f.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(f);
        CHECK(eig.eigenvalues().minCoeff() >=
              -1e-10 * std::abs(f.trace().real()));
      }
    }
  }
}

TEST_CASE("white noise recovers its flat spectral level") {
  const Eigen::VectorXd scale =
      (Eigen::VectorXd(3) << 1.0, 2.0, 0.5).finished();
  const Eigen::MatrixXd values = noise_matrix(3, 2048, 23, scale);
  RollConfig cfg;
  cfg.block = 512;
  const RollingEstimate est = rolling_window_estimate(values, cfg);
  for (int pi = 0; pi < 3; ++pi) {
    const double truth = scale(pi) * scale(pi);
    for (int ib = 0; ib < est.blocks(); ++ib) {
      double level = 0.0;
      for (Eigen::Index k = 0; k < est.omega.size(); ++k)
        level += est.at(ib, k)(pi, pi).real();
      level /= static_cast<double>(est.omega.size());
      CHECK(std::abs(level - truth) / truth < 0.15);
    }
  }
}

TEST_CASE("interpolation is bilinear with constant extrapolation") {
  // Hand-built estimate: two blocks, cells linear in frequency index with
  // different levels per block, so every interpolated value is predictable.
  RollingEstimate est;
  est.t = 128;
  est.block = 8;
  est.centers_u = (Eigen::VectorXd(2) << 0.25, 0.75).finished();
  est.omega = (Eigen::VectorXd(5) << 0.0, 0.125, 0.25, 0.375, 0.5).finished();
  est.chosen_span = {1, 1};
  for (int ib = 0; ib < 2; ++ib)
    for (int k = 0; k < 5; ++k)
      est.cells.push_back(Eigen::MatrixXcd::Constant(
          1, 1, std::complex<double>(10.0 * ib + k, 0.0)));

  auto value = [&](double u, double w) {
    return est.at_point(u, w)(0, 0).real();
  };
  CHECK_THAT(value(0.25, 0.0), Catch::Matchers::WithinAbs(0.0, 1e-14));
  CHECK_THAT(value(0.75, 0.25), Catch::Matchers::WithinAbs(12.0, 1e-14));
  CHECK_THAT(value(0.5, 0.25), Catch::Matchers::WithinAbs(7.0, 1e-14));
  CHECK_THAT(value(0.05, 0.5), Catch::Matchers::WithinAbs(4.0, 1e-14));
  CHECK_THAT(value(0.95, 0.5), Catch::Matchers::WithinAbs(14.0, 1e-14));
  CHECK_THAT(value(0.25, 0.0625), Catch::Matchers::WithinAbs(0.5, 1e-14));
  CHECK_THAT(value(0.625, 0.125), Catch::Matchers::WithinAbs(8.5, 1e-14));
  CHECK_THROWS_AS(est.at_point(0.5, 0.6), std::invalid_argument);

  const SpectralMatrixGrid grid = est.to_grid(
      (Eigen::VectorXd(2) << 0.25, 0.5).finished(),
      (Eigen::VectorXd(2) << 0.0, 0.25).finished());
  grid.validate();
  CHECK(grid.at(0, 0)(0, 0).real() == 0.0);
  CHECK(grid.at(1, 1)(0, 0).real() == 7.0);
}
