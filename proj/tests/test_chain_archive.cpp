/* Round-trip and damage-detection tests for the chain archive.
 *
 * Draw records filled with random values — including empty-parameter and
 * factor-bearing variants — must survive a write/read cycle with every
 * double bit-identical.  Damaged files (wrong magic, unknown version,
 * truncation in the header, a record, or the footer, and a lying footer
 * count) must be rejected with an error, never read as shorter archives.
 */
#include <catch2/catch_amalgamated.hpp>

#include "specfact/chain_archive.hpp"
#include "specfact/rng.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace {

using namespace specfact;

// Scratch file in the working directory, removed on destruction.
struct ScratchFile {
  std::string path;
  explicit ScratchFile(const std::string& name) : path(name) {}
  ~ScratchFile() { std::remove(path.c_str()); }
};

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

ArchivedDraw random_draw(int p, int q, int s, int l, std::int64_t t,
                         Rng& rng, bool with_params, bool with_factors) {
  ArchivedDraw draw;
  draw.iteration = rng.uniform_int(1, 1 << 20);
  draw.between_kind = static_cast<MoveKind>(rng.uniform_int(0, 3));
  draw.between_accepted = rng.uniform01() < 0.5;
  draw.within_attempted = rng.uniform01() < 0.5;
  draw.within_accepted = rng.uniform01() < 0.5;
  draw.loglik = rng.normal() * 1e3;
  draw.theta = random_matrix(4, 1, rng);
  draw.sigma2 = random_matrix(p, 1, rng).cwiseAbs();
  draw.g_eps = random_matrix(p, 1, rng).cwiseAbs();
  draw.partition.xi.assign(static_cast<std::size_t>(l) + 1, 0);
  for (int i = 1; i < l; ++i)
    draw.partition.xi[i] = t * i / l + rng.uniform_int(-2, 2);
  draw.partition.xi[l] = t;
  if (with_params) {
    for (int z = 0; z < l; ++z) {
      SegmentParams seg = SegmentParams::init(p, q, s, 7);
      seg.alpha = random_matrix(s, p * q, rng);
      seg.beta = random_matrix(s, p * q, rng);
      seg.tau2_re = random_matrix(p, q, rng).cwiseAbs();
      seg.tau2_im = random_matrix(p, q, rng).cwiseAbs();
      seg.g_re = random_matrix(p, q, rng).cwiseAbs();
      seg.g_im = random_matrix(p, q, rng).cwiseAbs();
      seg.phi_re = random_matrix(q, 1, rng).cwiseAbs();
      seg.phi_im = random_matrix(q, 1, rng).cwiseAbs();
      if (with_factors) {
        seg.factors = Eigen::MatrixXcd(7, q);
        for (int c = 0; c < q; ++c)
          for (int r = 0; r < 7; ++r)
            seg.factors(r, c) = {rng.normal(), rng.normal()};
      } else {
        seg.factors.resize(0, 0);
      }
      draw.params.push_back(std::move(seg));
    }
  }
  return draw;
}

bool bits_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

void require_identical(const ArchivedDraw& a, const ArchivedDraw& b) {
  CHECK(a.iteration == b.iteration);
  CHECK(a.between_kind == b.between_kind);
  CHECK(a.between_accepted == b.between_accepted);
  CHECK(a.within_attempted == b.within_attempted);
  CHECK(a.within_accepted == b.within_accepted);
  CHECK(a.loglik == b.loglik);
  CHECK(bits_equal(a.theta, b.theta));
  CHECK(bits_equal(a.sigma2, b.sigma2));
  CHECK(bits_equal(a.g_eps, b.g_eps));
  CHECK(a.partition.xi == b.partition.xi);
  REQUIRE(a.params.size() == b.params.size());
  for (std::size_t z = 0; z < a.params.size(); ++z) {
    const SegmentParams& x = a.params[z];
    const SegmentParams& y = b.params[z];
    CHECK(bits_equal(x.alpha, y.alpha));
    CHECK(bits_equal(x.beta, y.beta));
    CHECK(bits_equal(x.tau2_re, y.tau2_re));
    CHECK(bits_equal(x.tau2_im, y.tau2_im));
    CHECK(bits_equal(x.g_re, y.g_re));
    CHECK(bits_equal(x.g_im, y.g_im));
    CHECK(bits_equal(x.phi_re, y.phi_re));
    CHECK(bits_equal(x.phi_im, y.phi_im));
    REQUIRE(x.factors.rows() == y.factors.rows());
    REQUIRE(x.factors.cols() == y.factors.cols());
    for (Eigen::Index i = 0; i < x.factors.size(); ++i)
      CHECK(x.factors.data()[i] == y.factors.data()[i]);
  }
}

ArchiveHeader sample_header() {
  ArchiveHeader header;
  header.p = 3;
  header.q = 2;
  header.s = 4;
  header.t = 240;
  header.l_max = 4;
  header.t_min = 30;
  header.seed = 0xDEADBEEFCAFEF00Dull;
  header.config_hash = "a1b2c3d4";
  header.store_factors = true;
  header.iterations = 1000;
  header.burn_in = 200;
  return header;
}

std::string write_sample(const std::string& path, int n_draws) {
  ChainArchiveWriter writer(path, sample_header());
  Rng rng(907);
  for (int i = 0; i < n_draws; ++i)
    writer.append(random_draw(3, 2, 4, 1 + i % 3, 240, rng,
                              /*with_params=*/i % 4 != 3,
                              /*with_factors=*/i % 2 == 0));
  writer.close();
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("archive round trip is bit-exact") {
  ScratchFile file("archive_roundtrip.spfchain");
  ArchiveHeader header = sample_header();
  std::vector<ArchivedDraw> originals;
  {
    ChainArchiveWriter writer(file.path, header);
    Rng rng(271);
    for (int i = 0; i < 12; ++i) {
      originals.push_back(random_draw(3, 2, 4, 1 + i % 3, 240, rng,
                                      i % 4 != 3, i % 2 == 0));
      writer.append(originals.back());
    }
    CHECK(writer.count() == 12);
    writer.close();
  }

  ChainArchiveReader reader(file.path);
  CHECK(reader.header().p == header.p);
  CHECK(reader.header().q == header.q);
  CHECK(reader.header().s == header.s);
  CHECK(reader.header().t == header.t);
  CHECK(reader.header().l_max == header.l_max);
  CHECK(reader.header().t_min == header.t_min);
  CHECK(reader.header().seed == header.seed);
  CHECK(reader.header().config_hash == header.config_hash);
  CHECK(reader.header().store_factors == header.store_factors);
  CHECK(reader.header().iterations == header.iterations);
  CHECK(reader.header().burn_in == header.burn_in);

  const std::vector<ArchivedDraw> loaded = reader.read_all();
  REQUIRE(loaded.size() == originals.size());
  for (std::size_t i = 0; i < loaded.size(); ++i)
    require_identical(originals[i], loaded[i]);

  SECTION("a second read_all on the same reader yields nothing more") {
    CHECK(reader.read_all().empty());
  }
}

TEST_CASE("live sampler output archives cleanly") {
  ScratchFile file("archive_live.spfchain");
  Hyper hyper;
  hyper.q = 1;
  hyper.s = 2;
  ModelConfig config;
  config.t_min = 20;
  config.l_max = 2;
  Eigen::MatrixXd values(1, 60);
  {
    Rng rng(5);
    for (int ti = 0; ti < 60; ++ti) values(0, ti) = rng.normal();
  }

  ArchiveHeader header;
  header.p = 1;
  header.q = hyper.q;
  header.s = hyper.s;
  header.t = 60;
  header.l_max = config.l_max;
  header.t_min = config.t_min;
  header.seed = 77;
  header.iterations = 40;
  header.burn_in = 10;

  {
    ChainArchiveWriter writer(file.path, header);
    run_chain(values, config, hyper, 40, 10, 77, [&](const ChainDraw& draw) {
      writer.append(snapshot(draw));
    });
    writer.close();
    CHECK(writer.count() == 30);
  }

  ChainArchiveReader reader(file.path);
  const auto draws = reader.read_all();
  REQUIRE(draws.size() == 30);
  for (const ArchivedDraw& draw : draws) {
    CHECK(std::isfinite(draw.loglik));
    CHECK(draw.theta.size() == config.l_max);
    CHECK(draw.partition.xi.front() == 0);
    CHECK(draw.partition.xi.back() == 60);
    REQUIRE(draw.params.size() ==
            static_cast<std::size_t>(draw.partition.segments()));
    for (const SegmentParams& seg : draw.params) {
      CHECK(seg.alpha.rows() == hyper.s);
      CHECK(seg.factors.size() == 0);  // factors dropped by default
    }
  }
}

TEST_CASE("damaged archives are rejected") {
  ScratchFile file("archive_damage.spfchain");
  write_sample(file.path, 6);
  const std::string intact = slurp(file.path);
  ScratchFile mutant("archive_mutant.spfchain");

  SECTION("bad magic") {
    std::string bytes = intact;
    bytes[0] = 'X';
    spill(mutant.path, bytes);
    CHECK_THROWS_WITH(ChainArchiveReader(mutant.path),
                      Catch::Matchers::ContainsSubstring("bad magic"));
  }

  SECTION("unsupported version") {
    std::string bytes = intact;
    bytes[8] = 99;
    spill(mutant.path, bytes);
    CHECK_THROWS_WITH(ChainArchiveReader(mutant.path),
                      Catch::Matchers::ContainsSubstring("version"));
  }

  SECTION("header cut short") {
    spill(mutant.path, intact.substr(0, 20));
    CHECK_THROWS_WITH(ChainArchiveReader(mutant.path),
                      Catch::Matchers::ContainsSubstring("truncated"));
  }

  SECTION("record cut short") {
    spill(mutant.path, intact.substr(0, intact.size() / 2));
    ChainArchiveReader reader(mutant.path);
    ArchivedDraw draw;
    CHECK_THROWS_WITH(
        [&] {
          while (reader.next(draw)) {
          }
        }(),
        Catch::Matchers::ContainsSubstring("truncated"));
  }

  SECTION("missing footer") {
    // Drop the 12-byte footer entirely: the reader must not mistake the end
    // of data for a clean stop.
    spill(mutant.path, intact.substr(0, intact.size() - 12));
    ChainArchiveReader reader(mutant.path);
    ArchivedDraw draw;
    CHECK_THROWS_WITH(
        [&] {
          while (reader.next(draw)) {
          }
        }(),
        Catch::Matchers::ContainsSubstring("truncated"));
  }

  SECTION("footer count mismatch") {
    // Excise one whole record (length prefix plus payload) so the footer
    // declares more draws than remain.
    const std::size_t header_end =
        8 + 4 + 4 + nlohmann::json(sample_header()).dump().size();
    std::uint32_t first_len;
    std::memcpy(&first_len, intact.data() + header_end, 4);
    std::string bytes = intact.substr(0, header_end) +
                        intact.substr(header_end + 4 + first_len);
    spill(mutant.path, bytes);
    ChainArchiveReader reader(mutant.path);
    ArchivedDraw draw;
    CHECK_THROWS_WITH(
        [&] {
          while (reader.next(draw)) {
          }
        }(),
        Catch::Matchers::ContainsSubstring("count mismatch"));
  }

  SECTION("bytes after the footer") {
    std::string bytes = intact + "junk";
    spill(mutant.path, bytes);
    ChainArchiveReader reader(mutant.path);
    ArchivedDraw draw;
    CHECK_THROWS_WITH(
        [&] {
          while (reader.next(draw)) {
          }
        }(),
        Catch::Matchers::ContainsSubstring("after footer"));
  }
}
