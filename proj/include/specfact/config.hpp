#pragma once
/*
 * The run configuration: one document holding every knob of a fit — factor
 * model size, prior scales, partition-sampler settings, chain schedule, and
 * summary grids — so a run is reproducible from the document alone.  The
 * document round-trips through JSON, rejects unknown keys (a misspelled key
 * silently falling back to a default is the worst failure mode a config file
 * can have), and fingerprints itself with a 64-bit FNV-1a hash of its
 * canonical serialization.  The hash is stamped into every output an
 * estimation run produces.
 *
 * Expected data dimensions (p, t) are part of the document but optional:
 * zero means "take them from the input".  A document that pins them can be
 * validated end to end without the data present, and is cross-checked
 * against the input when one is given.
 */

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "specfact/estimator.hpp"
#include "specfact/gibbs.hpp"
#include "specfact/samc.hpp"

namespace specfact {

// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : text) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

struct RunConfig {
  // Factor model and priors.
  int q = 10;           // factors
  int s = 10;           // basis order per curve part
  double nu = 3.0;      // half-t degrees of freedom
  double g_eps = 10.0;  // half-t scale, idiosyncratic σ
  double g_tau = 10.0;  // half-t scale, smoothing τ
  double a1 = 2.0;      // shrinkage gamma shape, first factor
  double a2 = 3.0;      // shrinkage gamma shape, later factors

  // Partition sampler.
  int l_max = 10;
  std::int64_t t_min = 40;
  double relocation_mix = 0.2;
  double split_margin = 0.2;
  std::int64_t gain_floor = 1000;
  double theta_bound = 1e10;

  // Chain schedule.
  std::int64_t iterations = 10000;
  std::int64_t burn_in = 2000;
  std::uint64_t seed = 0;
  int chains = 1;
  bool store_factors = false;
  bool standardize_input = false;

  // Summary grids.
  int n_u = 100;
  int n_omega = 128;

  // Expected data dimensions; zero means taken from the input.
  int p = 0;
  std::int64_t t = 0;

  Hyper hyper() const {
    Hyper h;
    h.q = q;
    h.s = s;
    h.nu = nu;
    h.g_eps = g_eps;
    h.g_tau = g_tau;
    h.a1 = a1;
    h.a2 = a2;
    return h;
  }

  ModelConfig model() const {
    ModelConfig m;
    m.l_max = l_max;
    m.t_min = t_min;
    m.relocation_mix = relocation_mix;
    m.split_margin = split_margin;
    m.gain_floor = gain_floor;
    m.theta_bound = theta_bound;
    return m;
  }

  SummaryGrids grids() const { return SummaryGrids::defaults(n_u, n_omega); }

  // Data-independent checks; every length-dependent rule needs the series
  // length and lives in the overload below.
  void validate() const {
    hyper().validate();
    if (l_max < 1) throw std::invalid_argument("RunConfig: l_max must be ≥ 1");
    if (t_min < 2) throw std::invalid_argument("RunConfig: t_min must be ≥ 2");
    if (!(relocation_mix > 0.0 && relocation_mix < 1.0))
      throw std::invalid_argument("RunConfig: relocation mix must be in (0,1)");
    if (!(split_margin > 0.0 && split_margin < 0.5))
      throw std::invalid_argument("RunConfig: split margin must be in (0,1/2)");
    if (gain_floor < 1)
      throw std::invalid_argument("RunConfig: gain floor must be ≥ 1");
    if (!(theta_bound > 0.0))
      throw std::invalid_argument("RunConfig: theta bound must be positive");
    if (burn_in < 0 || iterations <= burn_in)
      throw std::invalid_argument(
          "RunConfig: iterations must exceed a nonnegative burn-in");
    if (chains < 1)
      throw std::invalid_argument("RunConfig: chains must be ≥ 1");
    if (n_u < 1 || n_omega < 1)
      throw std::invalid_argument("RunConfig: summary grids must be nonempty");
    if (p < 0 || t < 0)
      throw std::invalid_argument(
          "RunConfig: data dimensions cannot be negative");
    if (t > 0) model().validate(t);
  }

  // Checks against a concrete series length (and channel count when pinned).
  void validate(std::int64_t total_length) const {
    validate();
    if (t > 0 && t != total_length)
      throw std::invalid_argument(
          "RunConfig: configured length t does not match the input");
    model().validate(total_length);
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& cfg) {
  j = nlohmann::json{{"q", cfg.q},
                     {"s", cfg.s},
                     {"nu", cfg.nu},
                     {"g_eps", cfg.g_eps},
                     {"g_tau", cfg.g_tau},
                     {"a1", cfg.a1},
                     {"a2", cfg.a2},
                     {"l_max", cfg.l_max},
                     {"t_min", cfg.t_min},
                     {"relocation_mix", cfg.relocation_mix},
                     {"split_margin", cfg.split_margin},
                     {"gain_floor", cfg.gain_floor},
                     {"theta_bound", cfg.theta_bound},
                     {"iterations", cfg.iterations},
                     {"burn_in", cfg.burn_in},
                     {"seed", cfg.seed},
                     {"chains", cfg.chains},
                     {"store_factors", cfg.store_factors},
                     {"standardize_input", cfg.standardize_input},
                     {"n_u", cfg.n_u},
                     {"n_omega", cfg.n_omega},
                     {"p", cfg.p},
                     {"t", cfg.t}};
}

inline void from_json(const nlohmann::json& j, RunConfig& cfg) {
  if (!j.is_object())
    throw std::invalid_argument("RunConfig: document must be a JSON object");
  const RunConfig defaults;
  cfg = defaults;
  for (const auto& [key, value] : j.items()) {
    if (key == "q") value.get_to(cfg.q);
    else if (key == "s") value.get_to(cfg.s);
    else if (key == "nu") value.get_to(cfg.nu);
    else if (key == "g_eps") value.get_to(cfg.g_eps);
    else if (key == "g_tau") value.get_to(cfg.g_tau);
    else if (key == "a1") value.get_to(cfg.a1);
    else if (key == "a2") value.get_to(cfg.a2);
    else if (key == "l_max") value.get_to(cfg.l_max);
    else if (key == "t_min") value.get_to(cfg.t_min);
    else if (key == "relocation_mix") value.get_to(cfg.relocation_mix);
    else if (key == "split_margin") value.get_to(cfg.split_margin);
    else if (key == "gain_floor") value.get_to(cfg.gain_floor);
    else if (key == "theta_bound") value.get_to(cfg.theta_bound);
    else if (key == "iterations") value.get_to(cfg.iterations);
    else if (key == "burn_in") value.get_to(cfg.burn_in);
    else if (key == "seed") value.get_to(cfg.seed);
    else if (key == "chains") value.get_to(cfg.chains);
    else if (key == "store_factors") value.get_to(cfg.store_factors);
    else if (key == "standardize_input") value.get_to(cfg.standardize_input);
    else if (key == "n_u") value.get_to(cfg.n_u);
    else if (key == "n_omega") value.get_to(cfg.n_omega);
    else if (key == "p") value.get_to(cfg.p);
    else if (key == "t") value.get_to(cfg.t);
    else
      throw std::invalid_argument("RunConfig: unknown key '" + key + "'");
  }
}

// Canonical serialization: nlohmann objects keep keys sorted, and numbers
// print in their shortest round-trippable form, so equal configurations
// dump to equal strings.
inline std::string canonical_config(const RunConfig& cfg) {
  return nlohmann::json(cfg).dump();
}

inline std::string config_hash(const RunConfig& cfg) {
  return fnv1a_hex(canonical_config(cfg));
}

}  // namespace specfact
