/* chain_archive.hpp — binary storage for sampler output
 *
 * A chain archive holds the per-draw state a posterior summary needs: the
 * partition, the loading coefficients and scale parameters of every segment,
 * the shared noise, the weight vector ϑ at the time of the draw, and the
 * move bookkeeping.  The format is a fixed 8-byte magic "SPFCHAIN", a u32
 * format version, a length-prefixed JSON run header, a sequence of
 * length-prefixed draw records, and a footer carrying the record count.
 * Numbers are raw native-endian IEEE doubles, so round trips are bit-exact;
 * the files are not meant to travel between machines of different byte
 * order.  Truncation anywhere — header, record, or missing footer - is
 * detected and reported, never silently tolerated.
 */
#pragma once

#include "specfact/gibbs.hpp"
#include "specfact/partition.hpp"
#include "specfact/samc.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace specfact {

// ── Run header ───────────────────────────────────────────────────────────────

struct ArchiveHeader {
  int p = 0;                 // channels
  int q = 0;                 // factors
  int s = 0;                 // basis order
  std::int64_t t = 0;        // series length
  int l_max = 0;
  std::int64_t t_min = 0;
  std::uint64_t seed = 0;
  std::string config_hash;   // fingerprint of the full run configuration
  bool store_factors = false;
  std::int64_t iterations = 0;
  std::int64_t burn_in = 0;
};

inline void to_json(nlohmann::json& j, const ArchiveHeader& header) {
  j = nlohmann::json{{"p", header.p},
                     {"q", header.q},
                     {"s", header.s},
                     {"t", header.t},
                     {"l_max", header.l_max},
                     {"t_min", header.t_min},
                     {"seed", header.seed},
                     {"config_hash", header.config_hash},
                     {"store_factors", header.store_factors},
                     {"iterations", header.iterations},
                     {"burn_in", header.burn_in}};
}

inline void from_json(const nlohmann::json& j, ArchiveHeader& header) {
  j.at("p").get_to(header.p);
  j.at("q").get_to(header.q);
  j.at("s").get_to(header.s);
  j.at("t").get_to(header.t);
  j.at("l_max").get_to(header.l_max);
  j.at("t_min").get_to(header.t_min);
  j.at("seed").get_to(header.seed);
  j.at("config_hash").get_to(header.config_hash);
  j.at("store_factors").get_to(header.store_factors);
  j.at("iterations").get_to(header.iterations);
  j.at("burn_in").get_to(header.burn_in);
}

// ── Draw snapshot ────────────────────────────────────────────────────────────

// A self-contained copy of one retained draw.  params may be empty for
// lightweight records that only track the partition and weights; factors
// inside params may be empty when they were not retained.
struct ArchivedDraw {
  std::int64_t iteration = 0;
  MoveKind between_kind = MoveKind::none;
  bool between_accepted = false;
  bool within_attempted = false;
  bool within_accepted = false;
  double loglik = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd sigma2, g_eps;
  Partition partition;
  std::vector<SegmentParams> params;
};

inline ArchivedDraw snapshot(const ChainDraw& draw, bool keep_params = true,
                             bool keep_factors = false) {
  ArchivedDraw out;
  out.iteration = draw.iteration;
  out.between_kind = draw.between_kind;
  out.between_accepted = draw.between_accepted;
  out.within_attempted = draw.within_attempted;
  out.within_accepted = draw.within_accepted;
  out.loglik = draw.loglik;
  out.theta = *draw.theta;
  out.sigma2 = draw.state->noise.sigma2;
  out.g_eps = draw.state->noise.g_eps;
  out.partition = draw.state->partition;
  if (keep_params) {
    out.params = draw.state->params;
    if (!keep_factors)
      for (SegmentParams& segment : out.params) segment.factors.resize(0, 0);
  }
  return out;
}

// ── Low-level encoding ───────────────────────────────────────────────────────

namespace detail {

constexpr char kArchiveMagic[8] = {'S', 'P', 'F', 'C', 'H', 'A', 'I', 'N'};
constexpr std::uint32_t kArchiveVersion = 1;

inline void put_bytes(std::string& buf, const void* data, std::size_t n) {
  buf.append(static_cast<const char*>(data), n);
}

template <class T>
void put_pod(std::string& buf, T value) {
  put_bytes(buf, &value, sizeof(T));
}

inline void put_matrix(std::string& buf, const Eigen::MatrixXd& m) {
  put_pod<std::uint32_t>(buf, static_cast<std::uint32_t>(m.rows()));
  put_pod<std::uint32_t>(buf, static_cast<std::uint32_t>(m.cols()));
  put_bytes(buf, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

inline void put_vector(std::string& buf, const Eigen::VectorXd& v) {
  put_pod<std::uint32_t>(buf, static_cast<std::uint32_t>(v.size()));
  put_bytes(buf, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

inline void put_complex_matrix(std::string& buf, const Eigen::MatrixXcd& m) {
  put_pod<std::uint32_t>(buf, static_cast<std::uint32_t>(m.rows()));
  put_pod<std::uint32_t>(buf, static_cast<std::uint32_t>(m.cols()));
  put_bytes(buf, m.data(),
            2 * sizeof(double) * static_cast<std::size_t>(m.size()));
}

// Cursor over a record payload with hard bounds checking.
class ByteCursor {
 public:
  ByteCursor(const char* data, std::size_t size) : data_(data), size_(size) {}

  template <class T>
  T take() {
    T value;
    take_bytes(&value, sizeof(T));
    return value;
  }

  void take_bytes(void* out, std::size_t n) {
    if (pos_ + n > size_)
      throw std::runtime_error("chain archive: record payload truncated");
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }

  Eigen::MatrixXd take_matrix() {
    const auto rows = take<std::uint32_t>();
    const auto cols = take<std::uint32_t>();
    Eigen::MatrixXd m(rows, cols);
    take_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return m;
  }

  Eigen::VectorXd take_vector() {
    const auto n = take<std::uint32_t>();
    Eigen::VectorXd v(n);
    take_bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    return v;
  }

  Eigen::MatrixXcd take_complex_matrix() {
    const auto rows = take<std::uint32_t>();
    const auto cols = take<std::uint32_t>();
    Eigen::MatrixXcd m(rows, cols);
    take_bytes(m.data(),
               2 * sizeof(double) * static_cast<std::size_t>(m.size()));
    return m;
  }

  bool exhausted() const { return pos_ == size_; }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline std::string encode_draw(const ArchivedDraw& draw) {
  std::string buf;
  put_pod<std::uint64_t>(buf, static_cast<std::uint64_t>(draw.iteration));
  put_pod<std::uint8_t>(buf, static_cast<std::uint8_t>(draw.between_kind));
  put_pod<std::uint8_t>(buf, draw.between_accepted ? 1 : 0);
  put_pod<std::uint8_t>(buf, draw.within_attempted ? 1 : 0);
  put_pod<std::uint8_t>(buf, draw.within_accepted ? 1 : 0);
  put_pod<double>(buf, draw.loglik);
  put_vector(buf, draw.theta);
  put_vector(buf, draw.sigma2);
  put_vector(buf, draw.g_eps);
  put_pod<std::uint32_t>(buf,
                         static_cast<std::uint32_t>(draw.partition.xi.size()));
  put_bytes(buf, draw.partition.xi.data(),
            sizeof(std::int64_t) * draw.partition.xi.size());
  put_pod<std::uint8_t>(buf, draw.params.empty() ? 0 : 1);
  if (!draw.params.empty()) {
    if (draw.params.size() !=
        static_cast<std::size_t>(draw.partition.segments()))
      throw std::invalid_argument(
          "chain archive: params count does not match the partition");
    for (const SegmentParams& segment : draw.params) {
      put_matrix(buf, segment.alpha);
      put_matrix(buf, segment.beta);
      put_matrix(buf, segment.tau2_re);
      put_matrix(buf, segment.tau2_im);
      put_matrix(buf, segment.g_re);
      put_matrix(buf, segment.g_im);
      put_vector(buf, segment.phi_re);
      put_vector(buf, segment.phi_im);
      put_pod<std::uint8_t>(buf, segment.factors.size() > 0 ? 1 : 0);
      if (segment.factors.size() > 0)
        put_complex_matrix(buf, segment.factors);
    }
  }
  return buf;
}

inline ArchivedDraw decode_draw(const std::string& payload) {
  ByteCursor cur(payload.data(), payload.size());
  ArchivedDraw draw;
  draw.iteration = static_cast<std::int64_t>(cur.take<std::uint64_t>());
  const auto kind = cur.take<std::uint8_t>();
  if (kind > 3)
    throw std::runtime_error("chain archive: unknown move kind in record");
  draw.between_kind = static_cast<MoveKind>(kind);
  draw.between_accepted = cur.take<std::uint8_t>() != 0;
  draw.within_attempted = cur.take<std::uint8_t>() != 0;
  draw.within_accepted = cur.take<std::uint8_t>() != 0;
  draw.loglik = cur.take<double>();
  draw.theta = cur.take_vector();
  draw.sigma2 = cur.take_vector();
  draw.g_eps = cur.take_vector();
  const auto n_xi = cur.take<std::uint32_t>();
  if (n_xi < 2)
    throw std::runtime_error("chain archive: partition record too short");
  draw.partition.xi.resize(n_xi);
  cur.take_bytes(draw.partition.xi.data(), sizeof(std::int64_t) * n_xi);
  const bool has_params = cur.take<std::uint8_t>() != 0;
  if (has_params) {
    draw.params.resize(static_cast<std::size_t>(n_xi) - 1);
    for (SegmentParams& segment : draw.params) {
      segment.alpha = cur.take_matrix();
      segment.beta = cur.take_matrix();
      segment.tau2_re = cur.take_matrix();
      segment.tau2_im = cur.take_matrix();
      segment.g_re = cur.take_matrix();
      segment.g_im = cur.take_matrix();
      segment.phi_re = cur.take_vector();
      segment.phi_im = cur.take_vector();
      if (cur.take<std::uint8_t>() != 0)
        segment.factors = cur.take_complex_matrix();
    }
  }
  if (!cur.exhausted())
    throw std::runtime_error("chain archive: trailing bytes in record");
  return draw;
}

}  // namespace detail

// ── Writer ───────────────────────────────────────────────────────────────────

class ChainArchiveWriter {
 public:
  ChainArchiveWriter(const std::string& path, const ArchiveHeader& header)
      : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_)
      throw std::runtime_error("chain archive: cannot open for writing: " +
                               path);
    out_.write(detail::kArchiveMagic, sizeof(detail::kArchiveMagic));
    write_pod(detail::kArchiveVersion);
    const std::string header_json = nlohmann::json(header).dump();
    write_pod(static_cast<std::uint32_t>(header_json.size()));
    out_.write(header_json.data(),
               static_cast<std::streamsize>(header_json.size()));
  }

  ~ChainArchiveWriter() {
    if (!closed_) {
      try {
        close();
      } catch (...) {
        // Destructors must not throw; an explicit close() reports failures.
      }
    }
  }

  ChainArchiveWriter(const ChainArchiveWriter&) = delete;
  ChainArchiveWriter& operator=(const ChainArchiveWriter&) = delete;

  void append(const ArchivedDraw& draw) {
    if (closed_)
      throw std::logic_error("chain archive: append after close");
    const std::string payload = detail::encode_draw(draw);
    write_pod(static_cast<std::uint32_t>(payload.size()));
    out_.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    ++count_;
  }

  std::int64_t count() const { return count_; }

  // Writes the footer (zero length marker plus the record count) and flushes.
  void close() {
    if (closed_) return;
    write_pod(std::uint32_t{0});
    write_pod(static_cast<std::uint64_t>(count_));
    out_.flush();
    if (!out_)
      throw std::runtime_error("chain archive: write failure on " + path_);
    out_.close();
    closed_ = true;
  }

 private:
  template <class T>
  void write_pod(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  std::ofstream out_;
  std::string path_;
  std::int64_t count_ = 0;
  bool closed_ = false;
};

// ── Reader ───────────────────────────────────────────────────────────────────

class ChainArchiveReader {
 public:
  explicit ChainArchiveReader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_)
      throw std::runtime_error("chain archive: cannot open for reading: " +
                               path);
    char magic[sizeof(detail::kArchiveMagic)];
    must_read(magic, sizeof(magic), "magic");
    if (std::memcmp(magic, detail::kArchiveMagic, sizeof(magic)) != 0)
      throw std::runtime_error("chain archive: bad magic in " + path);
    const auto version = read_pod<std::uint32_t>("version");
    if (version != detail::kArchiveVersion)
      throw std::runtime_error(
          "chain archive: unsupported format version " +
          std::to_string(version) + " in " + path);
    const auto header_len = read_pod<std::uint32_t>("header length");
    std::string header_json(header_len, '\0');
    must_read(header_json.data(), header_len, "header");
    header_ = nlohmann::json::parse(header_json).get<ArchiveHeader>();
  }

  const ArchiveHeader& header() const { return header_; }

  // Reads the next draw; returns false after the footer has validated the
  // record count.  Throws on any structural damage.
  bool next(ArchivedDraw& out) {
    if (finished_) return false;
    const auto len = read_pod<std::uint32_t>("record length");
    if (len == 0) {
      const auto declared = read_pod<std::uint64_t>("footer count");
      if (static_cast<std::int64_t>(declared) != seen_)
        throw std::runtime_error(
            "chain archive: footer count mismatch in " + path_ + " (" +
            std::to_string(declared) + " declared, " + std::to_string(seen_) +
            " read)");
      in_.peek();
      if (!in_.eof())
        throw std::runtime_error("chain archive: data after footer in " +
                                 path_);
      finished_ = true;
      return false;
    }
    std::string payload(len, '\0');
    must_read(payload.data(), len, "record");
    out = detail::decode_draw(payload);
    ++seen_;
    return true;
  }

  std::vector<ArchivedDraw> read_all() {
    std::vector<ArchivedDraw> draws;
    ArchivedDraw draw;
    while (next(draw)) draws.push_back(std::move(draw));
    return draws;
  }

 private:
  void must_read(void* dest, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dest), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw std::runtime_error("chain archive: truncated " +
                               std::string(what) + " in " + path_);
  }

  template <class T>
  T read_pod(const char* what) {
    T value;
    must_read(&value, sizeof(T), what);
    return value;
  }

  std::ifstream in_;
  std::string path_;
  ArchiveHeader header_;
  std::int64_t seen_ = 0;
  bool finished_ = false;
};

}  // namespace specfact
