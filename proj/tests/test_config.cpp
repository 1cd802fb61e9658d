/* The run-configuration document and the on-disk estimate formats.
 *
 * A configuration must survive a JSON round trip field for field, fill
 * unset keys with defaults, reject unknown keys outright, and hash
 * canonically: equal documents hash equal, any field change moves the
 * hash.  The binary grid and rolling-estimate files must reproduce every
 * double bit for bit and refuse mislabeled or truncated files.
 */
#include <catch2/catch_amalgamated.hpp>

#include "specfact/config.hpp"
#include "specfact/grid_io.hpp"
#include "specfact/rng.hpp"

#include <cstdio>
#include <fstream>
#include <string>

namespace {

using namespace specfact;

struct ScratchFile {
  std::string path;
  explicit ScratchFile(const std::string& name) : path(name) {}
  ~ScratchFile() { std::remove(path.c_str()); }
};

bool same_config(const RunConfig& a, const RunConfig& b) {
  return canonical_config(a) == canonical_config(b);
}

}  // namespace

TEST_CASE("run configuration round-trips and hashes canonically") {
  RunConfig cfg;
  cfg.q = 6;
  cfg.s = 7;
  cfg.nu = 2.5;
  cfg.g_eps = 4.0;
  cfg.g_tau = 11.0;
  cfg.a1 = 2.25;
  cfg.a2 = 3.75;
  cfg.l_max = 4;
  cfg.t_min = 64;
  cfg.relocation_mix = 0.3;
  cfg.split_margin = 0.1;
  cfg.gain_floor = 500;
  cfg.theta_bound = 1e8;
  cfg.iterations = 3000;
  cfg.burn_in = 1000;
  cfg.seed = (std::uint64_t{1} << 63) + 5;
  cfg.chains = 3;
  cfg.store_factors = true;
  cfg.standardize_input = true;
  cfg.n_u = 50;
  cfg.n_omega = 64;
  cfg.p = 12;
  cfg.t = 1024;

  const RunConfig back = nlohmann::json(cfg).get<RunConfig>();
  CHECK(same_config(cfg, back));
  CHECK(back.seed == cfg.seed);
  CHECK(back.store_factors);
  CHECK(config_hash(cfg) == config_hash(back));

  // A partial document keeps defaults for everything it does not mention.
  const RunConfig partial =
      nlohmann::json{{"q", 4}, {"seed", 9}}.get<RunConfig>();
  CHECK(partial.q == 4);
  CHECK(partial.seed == 9);
  CHECK(partial.s == RunConfig{}.s);
  CHECK(partial.iterations == 10000);
  CHECK(partial.burn_in == 2000);

  // Any change to any field moves the hash.
  const std::string base_hash = config_hash(cfg);
  RunConfig tweaked = cfg;
  tweaked.seed += 1;
  CHECK(config_hash(tweaked) != base_hash);
  tweaked = cfg;
  tweaked.g_tau *= 1.0 + 1e-12;
  CHECK(config_hash(tweaked) != base_hash);

  CHECK(fnv1a_hex("").size() == 16);
  CHECK(fnv1a_hex("a") != fnv1a_hex("b"));

  const nlohmann::json misspelled = {{"qq", 4}};
  CHECK_THROWS_AS(misspelled.get<RunConfig>(), std::invalid_argument);
  CHECK_THROWS_AS(nlohmann::json::array().get<RunConfig>(),
                  std::invalid_argument);
}

TEST_CASE("run configuration validation and module mapping") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());  // defaults, no data pinned

  // Pinned dimensions make the document checkable without the data …
  cfg.l_max = 4;
  cfg.t_min = 300;
  cfg.t = 1024;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.t_min = 40;
  CHECK_NOTHROW(cfg.validate());

  // … and are cross-checked against the actual input length.
  CHECK_THROWS_AS(cfg.validate(512), std::invalid_argument);
  CHECK_NOTHROW(cfg.validate(1024));

  RunConfig bad = cfg;
  bad.chains = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.n_omega = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.burn_in = bad.iterations;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.split_margin = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.q = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  cfg.q = 5;
  cfg.s = 8;
  cfg.nu = 4.0;
  cfg.g_eps = 2.0;
  cfg.g_tau = 3.0;
  cfg.a1 = 2.5;
  cfg.a2 = 3.5;
  const Hyper hyper = cfg.hyper();
  CHECK(hyper.q == 5);
  CHECK(hyper.s == 8);
  CHECK(hyper.nu == 4.0);
  CHECK(hyper.g_eps == 2.0);
  CHECK(hyper.g_tau == 3.0);
  CHECK(hyper.a1 == 2.5);
  CHECK(hyper.a2 == 3.5);

  cfg.relocation_mix = 0.25;
  cfg.split_margin = 0.15;
  cfg.gain_floor = 777;
  cfg.theta_bound = 1e6;
  const ModelConfig model = cfg.model();
  CHECK(model.l_max == cfg.l_max);
  CHECK(model.t_min == cfg.t_min);
  CHECK(model.relocation_mix == 0.25);
  CHECK(model.split_margin == 0.15);
  CHECK(model.gain_floor == 777);
  CHECK(model.theta_bound == 1e6);

  const SummaryGrids grids = cfg.grids();
  CHECK(grids.u.size() == cfg.n_u);
  CHECK(grids.omega.size() == cfg.n_omega);
}

TEST_CASE("spectral grids round-trip through files bit for bit") {
  Rng rng(41);
  SpectralMatrixGrid grid = SpectralMatrixGrid::zeros(
      Eigen::VectorXd::LinSpaced(3, 0.1, 0.9),
      Eigen::VectorXd::LinSpaced(4, 0.05, 0.5), 2);
  for (Eigen::MatrixXcd& cell : grid.cells)
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r)
        cell(r, c) = {rng.normal(), rng.normal()};

  ScratchFile file("test_grid_roundtrip.bin");
  save_grid(grid, file.path);
  const SpectralMatrixGrid back = load_grid(file.path);
  REQUIRE(back.p == grid.p);
  REQUIRE(back.u == grid.u);
  REQUIRE(back.omega == grid.omega);
  REQUIRE(back.cells.size() == grid.cells.size());
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    CHECK(back.cells[i] == grid.cells[i]);
  CHECK(binary_format_of(file.path) == "grid");

  // Mislabeled and truncated files are rejected.
  {
    std::fstream out(file.path,
                     std::ios::binary | std::ios::in | std::ios::out);
    out.write("WRONGMAG", 8);
  }
  CHECK_THROWS_AS(load_grid(file.path), std::runtime_error);
  CHECK(binary_format_of(file.path).empty());

  save_grid(grid, file.path);
  {
    std::ifstream in(file.path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 9);
    std::ofstream out(file.path, std::ios::binary | std::ios::trunc);
    out << bytes;
  }
  CHECK_THROWS_AS(load_grid(file.path), std::runtime_error);
}

TEST_CASE("rolling estimates round-trip through files bit for bit") {
  Rng rng(42);
  Eigen::MatrixXd values(2, 64);
  for (int t = 0; t < 64; ++t)
    for (int p = 0; p < 2; ++p) values(p, t) = rng.normal();

  RollConfig cfg;
  cfg.block = 16;
  cfg.overlap = 0.5;
  cfg.spans = {3, 5};
  const RollingEstimate est = rolling_window_estimate(values, cfg);

  ScratchFile file("test_rolling_roundtrip.bin");
  save_rolling(est, file.path);
  const RollingEstimate back = load_rolling(file.path);
  CHECK(back.t == est.t);
  CHECK(back.block == est.block);
  CHECK(back.centers_u == est.centers_u);
  CHECK(back.omega == est.omega);
  CHECK(back.chosen_span == est.chosen_span);
  REQUIRE(back.cells.size() == est.cells.size());
  for (std::size_t i = 0; i < est.cells.size(); ++i)
    CHECK(back.cells[i] == est.cells[i]);
  CHECK(back.at_point(0.37, 0.21) == est.at_point(0.37, 0.21));
  CHECK(binary_format_of(file.path) == "rolling");

  ScratchFile chain_tag("test_magic_probe.bin");
  {
    std::ofstream out(chain_tag.path, std::ios::binary);
    out.write("SPFCHAIN", 8);
  }
  CHECK(binary_format_of(chain_tag.path) == "chain");
  CHECK_THROWS_AS(load_rolling(chain_tag.path), std::runtime_error);
  CHECK_THROWS_AS(binary_format_of("no_such_file.bin"), std::runtime_error);
}
