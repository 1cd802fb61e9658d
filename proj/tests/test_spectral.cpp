// Local DFT conventions, Parseval, Whittle likelihood, spectral functionals.
#include <catch2/catch_amalgamated.hpp>

#include "specfact/partition.hpp"
#include "specfact/rng.hpp"
#include "specfact/spectral.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

using namespace specfact;

namespace {

Eigen::MatrixXd random_series(int p, int t, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd values(p, t);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < t; ++j) values(i, j) = rng.normal();
  return values;
}

// Random unitary matrix from the QR factorization of a complex Gaussian.
Eigen::MatrixXcd random_unitary(int q, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXcd g(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      g(i, j) = std::complex<double>(rng.normal(), rng.normal());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd unitary =
      qr.householderQ() * Eigen::MatrixXcd::Identity(q, q);
  return unitary;
}

}  // namespace

TEST_CASE("partition bookkeeping") {
  Partition partition{{0, 40, 100}};
  REQUIRE(partition.segments() == 2);
  REQUIRE(partition.length() == 100);
  REQUIRE(partition.segment_length(0) == 40);
  REQUIRE(partition.segment_containing(40) == 0);
  REQUIRE(partition.segment_containing(41) == 1);
  REQUIRE_THAT(partition.midpoint_u(0), Catch::Matchers::WithinAbs(0.2, 1e-15));
  REQUIRE_THAT(partition.midpoint_u(1), Catch::Matchers::WithinAbs(0.7, 1e-15));

  REQUIRE_NOTHROW(validate_partition(partition, 100, 40));
  REQUIRE_THROWS_AS(validate_partition(partition, 100, 41),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate_partition(Partition{{0, 50, 40, 100}}, 100, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate_partition(Partition{{0, 99}}, 100, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(partition.segment_containing(0), std::out_of_range);
}

TEST_CASE("fourier frequency counts and values") {
  const FourierGrid even = fourier_frequencies(8);
  REQUIRE(even.count == 3);
  REQUIRE_THAT(even.omega(0), Catch::Matchers::WithinAbs(1.0 / 8, 1e-15));
  REQUIRE_THAT(even.omega(2), Catch::Matchers::WithinAbs(3.0 / 8, 1e-15));

  const FourierGrid odd = fourier_frequencies(9);
  REQUIRE(odd.count == 4);
  REQUIRE_THAT(odd.omega(3), Catch::Matchers::WithinAbs(4.0 / 9, 1e-15));

  REQUIRE(fourier_frequencies(2).count == 0);
  REQUIRE_THROWS_AS(fourier_frequencies(1), std::invalid_argument);
}

TEST_CASE("fft local dft matches the defining sum on offset segments") {
  const Eigen::MatrixXd values = random_series(3, 90, 11);
  for (auto [start, end] : {std::pair<std::int64_t, std::int64_t>{0, 90},
                            {0, 31},
                            {17, 60},
                            {60, 90},
                            {83, 90}}) {
    const SegmentDft fft_dft = local_dft_segment(values, start, end);
    const SegmentDft naive = local_dft_naive(values, start, end);
    REQUIRE(fft_dft.y.rows() == naive.y.rows());
    REQUIRE((fft_dft.y - naive.y).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("a pure cosine concentrates at its own frequency") {
  const int t = 64, k0 = 5;
  Eigen::MatrixXd values(1, t);
  for (int ti = 1; ti <= t; ++ti)
    values(0, ti - 1) = std::cos(2 * std::numbers::pi * k0 * ti / t);
  const SegmentDft dft = local_dft_segment(values, 0, t);
  // Y_k0 collects T/2 of the cosine's mass: |Y_k0| = √T / 2.
  REQUIRE_THAT(std::abs(dft.y(k0 - 1, 0)),
               Catch::Matchers::WithinAbs(std::sqrt(static_cast<double>(t)) / 2, 1e-10));
  for (int k = 1; k <= dft.y.rows(); ++k)
    if (k != k0) REQUIRE(std::abs(dft.y(k - 1, 0)) < 1e-10);
}

TEST_CASE("absolute-time phase carries through segment offsets") {
  // A segment of x shifted in absolute time differs from the same values at
  // offset zero by exactly the phase e^{−2πik·shift/T_seg} per frequency.
  const Eigen::MatrixXd values = random_series(2, 50, 21);
  const std::int64_t start = 13, end = 45;
  const std::int64_t len = end - start;
  Eigen::MatrixXd shifted(2, len);
  shifted = values.middleCols(start, len);
  const SegmentDft offset_dft = local_dft_segment(values, start, end);
  const SegmentDft zero_dft = local_dft_segment(shifted, 0, len);
  for (int k = 1; k <= offset_dft.y.rows(); ++k) {
    const double phase =
        -2.0 * std::numbers::pi * k * static_cast<double>(start) /
        static_cast<double>(len);
    const std::complex<double> shift(std::cos(phase), std::sin(phase));
    REQUIRE((offset_dft.y.row(k - 1) - shift * zero_dft.y.row(k - 1))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
  }
}

TEST_CASE("parseval holds for the full two-sided transform") {
  for (int t : {48, 49}) {
    const Eigen::MatrixXd values = random_series(4, t, 7 + t);
    const Eigen::MatrixXcd y = full_dft(values, 0, t);
    const double freq_energy = y.cwiseAbs2().sum();
    const double time_energy = values.cwiseAbs2().sum();
    REQUIRE_THAT(freq_energy / time_energy,
                 Catch::Matchers::WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("local dft over a partition covers every segment") {
  const Eigen::MatrixXd values = random_series(2, 60, 3);
  const Partition partition{{0, 25, 60}};
  const auto dfts = local_dft(values, partition);
  REQUIRE(dfts.size() == 2);
  REQUIRE(dfts[0].y.rows() == fourier_frequencies(25).count);
  REQUIRE(dfts[1].y.rows() == fourier_frequencies(35).count);
  REQUIRE_THROWS_AS(local_dft(values, Partition{{0, 61}}),
                    std::invalid_argument);
}

TEST_CASE("whittle likelihood matches a hand-rolled evaluation") {
  const int k_count = 4, p = 2, q = 1;
  Rng rng(42);
  Eigen::MatrixXcd y(k_count, p), factors(k_count, q);
  std::vector<Eigen::MatrixXcd> lambda;
  for (int k = 0; k < k_count; ++k) {
    Eigen::MatrixXcd lk(p, q);
    for (int pi = 0; pi < p; ++pi) {
      y(k, pi) = std::complex<double>(rng.normal(), rng.normal());
      lk(pi, 0) = std::complex<double>(rng.normal(), rng.normal());
    }
    factors(k, 0) = std::complex<double>(rng.normal(), rng.normal());
    lambda.push_back(lk);
  }
  Eigen::VectorXd sigma2(p);
  sigma2 << 0.5, 2.0;

  double expected = 0.0;
  for (int k = 0; k < k_count; ++k)
    for (int pi = 0; pi < p; ++pi) {
      const std::complex<double> resid =
          y(k, pi) - lambda[static_cast<std::size_t>(k)](pi, 0) * factors(k, 0);
      expected += -0.5 * std::log(sigma2(pi)) - std::norm(resid) / sigma2(pi);
    }
  REQUIRE_THAT(whittle_loglik(y, lambda, factors, sigma2),
               Catch::Matchers::WithinAbs(expected, 1e-12));

  // A perfect fit leaves only the normalization term.
  Eigen::MatrixXcd fit_y(k_count, p);
  for (int k = 0; k < k_count; ++k)
    fit_y.row(k) =
        (lambda[static_cast<std::size_t>(k)] * factors.row(k).transpose())
            .transpose();
  REQUIRE_THAT(
      whittle_loglik(fit_y, lambda, factors, sigma2),
      Catch::Matchers::WithinAbs(
          -k_count * 0.5 * (std::log(sigma2(0)) + std::log(sigma2(1))), 1e-12));

  Eigen::VectorXd bad = sigma2;
  bad(0) = 0.0;
  REQUIRE_THROWS_AS(whittle_loglik(y, lambda, factors, bad), std::domain_error);
}

TEST_CASE("whittle likelihood is invariant to unitary factor rotations") {
  const int k_count = 6, p = 3, q = 2;
  Rng rng(77);
  Eigen::MatrixXcd y(k_count, p), factors(k_count, q);
  std::vector<Eigen::MatrixXcd> lambda;
  for (int k = 0; k < k_count; ++k) {
    Eigen::MatrixXcd lk(p, q);
    for (int pi = 0; pi < p; ++pi) {
      y(k, pi) = std::complex<double>(rng.normal(), rng.normal());
      for (int qi = 0; qi < q; ++qi)
        lk(pi, qi) = std::complex<double>(rng.normal(), rng.normal());
    }
    for (int qi = 0; qi < q; ++qi)
      factors(k, qi) = std::complex<double>(rng.normal(), rng.normal());
    lambda.push_back(lk);
  }
  Eigen::VectorXd sigma2 = Eigen::VectorXd::Constant(p, 1.3);

  const Eigen::MatrixXcd u = random_unitary(q, 5);
  std::vector<Eigen::MatrixXcd> rotated_lambda;
  for (const auto& lk : lambda) rotated_lambda.push_back(lk * u);
  // D ↦ U* D keeps Λ D invariant.
  Eigen::MatrixXcd rotated_factors(k_count, q);
  for (int k = 0; k < k_count; ++k)
    rotated_factors.row(k) =
        (u.adjoint() * factors.row(k).transpose()).transpose();

  const double base = whittle_loglik(y, lambda, factors, sigma2);
  const double rotated = whittle_loglik(y, rotated_lambda, rotated_factors, sigma2);
  REQUIRE_THAT(rotated, Catch::Matchers::WithinAbs(base, 1e-10));
}

TEST_CASE("assembled spectra are hermitian, positive, and rotation invariant") {
  const int p = 5, q = 3;
  Rng rng(123);
  Eigen::MatrixXcd lambda(p, q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j)
      lambda(i, j) = std::complex<double>(rng.normal(), rng.normal());
  Eigen::VectorXd sigma2(p);
  for (int i = 0; i < p; ++i) sigma2(i) = 0.25 + rng.uniform01();

  const Eigen::MatrixXcd f = assemble_spectrum(lambda, sigma2);
  REQUIRE((f - f.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eigensolver(f);
  const double floor = -1e-10 * f.real().trace() / p;
  REQUIRE(eigensolver.eigenvalues().minCoeff() >= floor);

  const Eigen::MatrixXcd rotated =
      assemble_spectrum(lambda * random_unitary(q, 9), sigma2);
  REQUIRE((rotated - f).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("squared coherence is bounded and unit on the diagonal") {
  const int p = 4, q = 2;
  Rng rng(55);
  Eigen::MatrixXcd lambda(p, q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j)
      lambda(i, j) = std::complex<double>(rng.normal(), rng.normal());
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Constant(p, 0.7);
  const Eigen::MatrixXcd f = assemble_spectrum(lambda, sigma2);

  const Eigen::MatrixXd rho = squared_coherence(f);
  for (int j = 0; j < p; ++j) {
    REQUIRE_THAT(rho(j, j), Catch::Matchers::WithinAbs(1.0, 1e-12));
    for (int k = 0; k < p; ++k) {
      REQUIRE(rho(j, k) >= 0.0);
      REQUIRE(rho(j, k) <= 1.0 + 1e-12);
    }
  }

  Eigen::MatrixXcd bad = f;
  bad(0, 0) = 0.0;
  REQUIRE_THROWS_AS(squared_coherence(bad), std::domain_error);
}

TEST_CASE("band collapse integrates exactly on piecewise-linear curves") {
  const int n = 51;
  Eigen::VectorXd omega(n);
  std::vector<Eigen::MatrixXcd> constant, linear;
  for (int i = 0; i < n; ++i) {
    omega(i) = 0.5 * i / (n - 1);
    constant.push_back(Eigen::MatrixXcd::Constant(1, 1, 3.0));
    linear.push_back(Eigen::MatrixXcd::Constant(1, 1, omega(i)));
  }

  // Constant curve: integral = width × value, exactly, for off-grid edges.
  const Eigen::MatrixXcd w = band_collapse(omega, constant,
                                           Band{0.123, 0.321, false}, {});
  REQUIRE_THAT(w(0, 0).real(),
               Catch::Matchers::WithinAbs(3.0 * (0.321 - 0.123), 1e-12));

  // f(ω) = ω over the whole axis: ∫₀^½ ω dω = 1/8.
  const Eigen::MatrixXcd full =
      band_collapse(omega, linear, Band{0.0, 0.5, false}, {});
  REQUIRE_THAT(full(0, 0).real(), Catch::Matchers::WithinAbs(0.125, 1e-12));

  // Additivity when the split point is on the grid.
  const Eigen::MatrixXcd lo_half =
      band_collapse(omega, linear, Band{0.0, 0.25, false}, {});
  const Eigen::MatrixXcd hi_half =
      band_collapse(omega, linear, Band{0.25, 0.5, false}, {});
  REQUIRE_THAT(lo_half(0, 0).real() + hi_half(0, 0).real(),
               Catch::Matchers::WithinAbs(full(0, 0).real(), 1e-12));

  // An Hz band on a constant curve yields width-in-Hz × value.
  const Eigen::MatrixXcd hz_band =
      band_collapse(omega, constant, Band{31.0, 80.0, true}, 200.0);
  REQUIRE_THAT(hz_band(0, 0).real(),
               Catch::Matchers::WithinAbs(3.0 * 49.0, 1e-10));

  REQUIRE_THROWS_AS(band_collapse(omega, constant, Band{0.6, 0.9, false}, {}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(band_collapse(omega, constant, Band{31.0, 80.0, true}, {}),
                    std::invalid_argument);
}

TEST_CASE("band coherence stays within the unit interval") {
  const int n = 33, p = 3, q = 2;
  Rng rng(404);
  Eigen::VectorXd omega(n);
  std::vector<Eigen::MatrixXcd> f;
  for (int i = 0; i < n; ++i) {
    omega(i) = 0.5 * (i + 1) / n;
    Eigen::MatrixXcd lambda(p, q);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < q; ++b)
        lambda(a, b) = std::complex<double>(rng.normal(), rng.normal());
    f.push_back(assemble_spectrum(lambda, Eigen::VectorXd::Constant(p, 0.5)));
  }
  const Eigen::MatrixXd rho =
      band_coherence(omega, f, Band{0.1, 0.4, false}, {});
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) {
      REQUIRE(rho(j, k) >= 0.0);
      REQUIRE(rho(j, k) <= 1.0 + 1e-12);
    }
}
