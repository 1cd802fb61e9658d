/* samc.hpp — trans-dimensional sampler over segment partitions
 *
 * The number of segments L and the partition Ξ_L carry a uniform prior on
 * L ∈ {1..L_max} and the sequential-uniform partition prior
 * Pr(Ξ|L) = Π_ℓ 1/a_ℓ with a_ℓ = T − ξ_{ℓ−1} − (L−ℓ+1)t_min + 1.  The chain
 * explores models with a stochastic-approximation weight vector ϑ: the
 * working target at model L is π(x)/e^{ϑ_L}, and after every iteration ϑ is
 * nudged by γ_j (e_L − p₀1) with γ_j = j₀/max(j₀, j) and p₀ = 1/L_max, which
 * drives the chain to visit all model sizes and stores the evidence ratios
 * in ϑ itself.  Posterior summaries undo the reweighting with per-draw
 * importance weights e^{ϑ_L}.
 *
 * Each iteration makes one between-model attempt (birth or death), one
 * within-model pass (a relocation of a single partition point), and a Gibbs
 * refresh.  All move ratios are taken on the factor-collapsed posterior: the
 * factors enter the likelihood linearly with a standard complex-normal
 * prior, so they integrate out in closed form (collapsed_segment_loglik),
 * and the refresh restores them with an exact conditional draw.
 * Marginalizing first and augmenting afterwards leaves the joint posterior
 * invariant, and it removes the highest-dimensional block from every
 * acceptance ratio.
 *
 * Segment coefficients move through the proposals themselves: every move
 * redraws the affected segments' coefficients via the sequential
 * full-conditional recipe of gibbs.hpp with the factors pinned at their
 * conditional mean given the seed coefficients, and the evaluate mode of the
 * same recipe supplies the reverse-direction densities (seeds mirrored:
 * current values seed the forward scans, proposed values seed the reverse
 * replay; a birth seeds children with the parent and the reverse merge with
 * the children's average).  Keeping the coefficient state on this proposal
 * family is what makes forward and reverse scan densities comparable, so
 * acceptance ratios stay O(1) even with thousands of coefficient
 * dimensions.  A relocation carries the smoothing and shrinkage scales
 * across unchanged (their dimensions do not depend on the extent); birth
 * splits them through elementwise factors u/(1−u), u ~ U(a, 1−a), and death
 * merges them by elementwise geometric means, which inverts the split
 * exactly.  The refresh then runs the scale hierarchy (τ², g, φ, σ², g_ε)
 * every iteration, plus the coefficient blocks whenever a single segment
 * covers the series.
 */
#pragma once

#include "specfact/gibbs.hpp"
#include "specfact/partition.hpp"
#include "specfact/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace specfact {

// ── Configuration ────────────────────────────────────────────────────────────

// Two conventions for the split-move Jacobian: the exact per-component
// determinant of the (parent, u) → (child₁, child₂) map, Π 2(√c₁+√c₂)², and
// an alternative quadratic-sum bookkeeping 2Σ‖c₁+c₂‖² retained for
// comparison.  The default is the exact determinant.
enum class JacobianMode { per_component_product, quadratic_sum };

struct ModelConfig {
  int l_max = 10;
  std::int64_t t_min = 40;
  double relocation_mix = 0.2;  // p: weight of the long-range relocation draw
  double split_margin = 0.2;    // a: birth-split factors u ~ U(a, 1−a)
  std::int64_t gain_floor = 1000;  // j₀ in γ_j = j₀/max(j₀, j)
  double theta_bound = 1e10;
  JacobianMode jacobian = JacobianMode::per_component_product;

  void validate(std::int64_t total_length) const {
    if (l_max < 1) throw std::invalid_argument("ModelConfig: l_max must be ≥ 1");
    if (t_min < 2) throw std::invalid_argument("ModelConfig: t_min must be ≥ 2");
    if (static_cast<std::int64_t>(l_max) * t_min > total_length)
      throw std::invalid_argument(
          "ModelConfig: l_max · t_min exceeds the series length");
    if (!(relocation_mix > 0.0 && relocation_mix < 1.0))
      throw std::invalid_argument("ModelConfig: relocation mix must be in (0,1)");
    if (!(split_margin > 0.0 && split_margin < 0.5))
      throw std::invalid_argument("ModelConfig: split margin must be in (0,1/2)");
    if (gain_floor < 1)
      throw std::invalid_argument("ModelConfig: gain floor must be ≥ 1");
  }
};

// ── Self-adjusting weights ───────────────────────────────────────────────────

struct SamcState {
  Eigen::VectorXd theta;  // ϑ_L at index L−1
  std::int64_t gain_floor = 1000;
  std::int64_t iteration = 0;
  double bound = 1e10;

  static SamcState init(const ModelConfig& config) {
    SamcState samc;
    samc.theta = Eigen::VectorXd::Zero(config.l_max);
    samc.gain_floor = config.gain_floor;
    samc.bound = config.theta_bound;
    return samc;
  }

  double p0() const { return 1.0 / static_cast<double>(theta.size()); }

  double gain_at(std::int64_t j) const {
    return static_cast<double>(gain_floor) /
           static_cast<double>(std::max(gain_floor, j));
  }

  // One stochastic-approximation step with the realized model size; the
  // update is mean-zero across components, and a recentering shift (which
  // never changes weight ratios) guards the compact box.
  void update(int realized_l) {
    if (realized_l < 1 || realized_l > theta.size())
      throw std::out_of_range("SamcState::update: model index out of range");
    ++iteration;
    const double gain = gain_at(iteration);
    theta.array() -= gain * p0();
    theta(realized_l - 1) += gain;
    if (theta.cwiseAbs().maxCoeff() > bound) theta.array() -= theta.mean();
  }
};

// ── Partition prior ──────────────────────────────────────────────────────────

inline double partition_log_prior(const Partition& partition,
                                  std::int64_t t_min, int l_max) {
  const int l = partition.segments();
  const std::int64_t total = partition.xi.back();
  double log_prior = -std::log(static_cast<double>(l_max));
  for (int ell = 1; ell <= l - 1; ++ell) {
    const std::int64_t slots =
        total - partition.xi[ell - 1] -
        static_cast<std::int64_t>(l - ell + 1) * t_min + 1;
    if (slots <= 0)
      throw std::domain_error("partition_log_prior: infeasible partition");
    log_prior -= std::log(static_cast<double>(slots));
  }
  return log_prior;
}

// ── Segment data cache ───────────────────────────────────────────────────────

// Local DFTs and basis designs keyed by segment extent; proposals revisit
// extents constantly, and shared ownership keeps live segments valid across
// the occasional wholesale eviction.
class SegmentDataCache {
 public:
  SegmentDataCache(const Eigen::MatrixXd& values, int order)
      : values_(&values), order_(order) {}

  std::shared_ptr<const SegmentData> get(std::int64_t start, std::int64_t end) {
    const std::uint64_t key = (static_cast<std::uint64_t>(start) << 32) |
                              static_cast<std::uint64_t>(end);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= 512) cache_.clear();
    auto data = std::make_shared<const SegmentData>(
        build_segment_data(*values_, start, end, order_));
    cache_.emplace(key, data);
    return data;
  }

 private:
  const Eigen::MatrixXd* values_;
  int order_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const SegmentData>> cache_;
};

// ── Model state ──────────────────────────────────────────────────────────────

struct ModelState {
  Partition partition;
  std::vector<std::shared_ptr<const SegmentData>> data;
  std::vector<SegmentParams> params;
  std::vector<SegmentWorkspace> ws;
  SharedNoise noise;

  int segments() const { return partition.segments(); }

  double loglik() const {
    double total = 0.0;
    for (std::size_t z = 0; z < data.size(); ++z)
      total += segment_loglik(*data[z], ws[z], noise.sigma2);
    return total;
  }

  static ModelState init(const Eigen::MatrixXd& values, const Hyper& hyper,
                         SegmentDataCache& cache) {
    ModelState state;
    const std::int64_t total = values.cols();
    state.partition = Partition::whole(total);
    state.data.push_back(cache.get(0, total));
    state.params.push_back(SegmentParams::init(
        static_cast<int>(values.rows()), hyper.q, hyper.s,
        state.data[0]->k()));
    state.ws.push_back(SegmentWorkspace::build(*state.data[0],
                                               state.params[0]));
    state.noise = SharedNoise::init(static_cast<int>(values.rows()));
    return state;
  }
};

// ── Move proposals ───────────────────────────────────────────────────────────

enum class MoveKind { none, birth, death, within };

struct SegmentSlot {
  std::shared_ptr<const SegmentData> data;
  SegmentParams params;
  SegmentWorkspace ws;
};

// A fully-built proposal with its acceptance ratio decomposed into the
// pieces an independent re-derivation can check term by term.
struct MoveProposal {
  MoveKind kind = MoveKind::none;
  bool feasible = false;
  double log_accept = -std::numeric_limits<double>::infinity();
  double theta_term = 0.0;
  double delta_loglik = 0.0;
  double delta_log_prior = 0.0;  // partition prior + created/destroyed blocks
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;
  double log_jacobian = 0.0;
  Partition partition;
  int replace_first = 0;
  int replace_count = 0;
  std::vector<SegmentSlot> inserted;
};

inline void apply_proposal(ModelState& state, MoveProposal&& proposal) {
  state.partition = std::move(proposal.partition);
  const auto first = proposal.replace_first;
  state.data.erase(state.data.begin() + first,
                   state.data.begin() + first + proposal.replace_count);
  state.params.erase(state.params.begin() + first,
                     state.params.begin() + first + proposal.replace_count);
  state.ws.erase(state.ws.begin() + first,
                 state.ws.begin() + first + proposal.replace_count);
  for (std::size_t i = 0; i < proposal.inserted.size(); ++i) {
    auto& slot = proposal.inserted[i];
    state.data.insert(state.data.begin() + first + i, std::move(slot.data));
    state.params.insert(state.params.begin() + first + i,
                        std::move(slot.params));
    state.ws.insert(state.ws.begin() + first + i, std::move(slot.ws));
  }
}

// Copy-and-apply, for oracles that need both states side by side.
inline ModelState materialize(const ModelState& current,
                              const MoveProposal& proposal) {
  ModelState next = current;
  MoveProposal copy = proposal;
  apply_proposal(next, std::move(copy));
  return next;
}

// ── Between-model planning ───────────────────────────────────────────────────

struct JumpPlan {
  double pr_birth = 0.0;
  double pr_death = 0.0;
  int splittable = 0;  // segments holding at least 2·t_min points
};

inline JumpPlan plan_jump(const Partition& partition,
                          const ModelConfig& config) {
  JumpPlan plan;
  for (int z = 0; z < partition.segments(); ++z)
    if (partition.segment_length(z) >= 2 * config.t_min) ++plan.splittable;
  const int l = partition.segments();
  const bool can_birth = plan.splittable > 0 && l < config.l_max;
  const bool can_death = l > 1;
  if (can_birth && can_death) {
    plan.pr_birth = 0.5;
    plan.pr_death = 0.5;
  } else if (can_birth) {
    plan.pr_birth = 1.0;
  } else if (can_death) {
    plan.pr_death = 1.0;
  }
  return plan;
}

namespace detail {

// log|J| of the elementwise split, computed from the two children (identical
// seen from either direction of the move).
inline double log_split_jacobian(const SegmentParams& c1,
                                 const SegmentParams& c2, JacobianMode mode) {
  if (mode == JacobianMode::per_component_product) {
    double total = 0.0;
    auto accumulate = [&total](const auto& x1, const auto& x2) {
      total += (2.0 * (x1.cwiseSqrt() + x2.cwiseSqrt()).array().square())
                   .log()
                   .sum();
    };
    accumulate(c1.tau2_re, c2.tau2_re);
    accumulate(c1.tau2_im, c2.tau2_im);
    accumulate(c1.phi_re, c2.phi_re);
    accumulate(c1.phi_im, c2.phi_im);
    return total;
  }
  const double sum = 2.0 * (c1.tau2_re + c2.tau2_re).squaredNorm() +
                     2.0 * (c1.tau2_im + c2.tau2_im).squaredNorm() +
                     2.0 * (c1.phi_re + c2.phi_re).squaredNorm() +
                     2.0 * (c1.phi_im + c2.phi_im).squaredNorm();
  return std::log(sum);
}

// Splits every smoothing and shrinkage component of the parent into the two
// children via independent factors u/(1−u); returns the count of u draws.
inline int split_scale_parameters(const SegmentParams& parent,
                                  SegmentParams& c1, SegmentParams& c2,
                                  double margin, Rng& rng) {
  int draws = 0;
  auto split = [&](double parent_value, double& child1, double& child2) {
    const double u = rng.uniform(margin, 1.0 - margin);
    const double ratio = u / (1.0 - u);
    child1 = parent_value * ratio;
    child2 = parent_value / ratio;
    ++draws;
  };
  for (int qi = 0; qi < parent.q(); ++qi)
    for (int pi = 0; pi < parent.p(); ++pi)
      split(parent.tau2_re(pi, qi), c1.tau2_re(pi, qi), c2.tau2_re(pi, qi));
  for (int qi = 0; qi < parent.q(); ++qi)
    for (int pi = 0; pi < parent.p(); ++pi)
      split(parent.tau2_im(pi, qi), c1.tau2_im(pi, qi), c2.tau2_im(pi, qi));
  for (int h = 0; h < parent.q(); ++h)
    split(parent.phi_re(h), c1.phi_re(h), c2.phi_re(h));
  for (int h = 0; h < parent.q(); ++h)
    split(parent.phi_im(h), c1.phi_im(h), c2.phi_im(h));
  return draws;
}

// Checks that every component pair is reachable by a split with
// u ∈ (margin, 1−margin); the implied u is √c₁/(√c₁+√c₂).
inline bool merge_in_range(const SegmentParams& c1, const SegmentParams& c2,
                           double margin) {
  auto ok = [margin](double x1, double x2) {
    const double u = std::sqrt(x1) / (std::sqrt(x1) + std::sqrt(x2));
    return u > margin && u < 1.0 - margin;
  };
  for (int qi = 0; qi < c1.q(); ++qi)
    for (int pi = 0; pi < c1.p(); ++pi)
      if (!ok(c1.tau2_re(pi, qi), c2.tau2_re(pi, qi)) ||
          !ok(c1.tau2_im(pi, qi), c2.tau2_im(pi, qi)))
        return false;
  for (int h = 0; h < c1.q(); ++h)
    if (!ok(c1.phi_re(h), c2.phi_re(h)) || !ok(c1.phi_im(h), c2.phi_im(h)))
      return false;
  return true;
}

inline int count_scale_components(const SegmentParams& params) {
  return 2 * params.p() * params.q() + 2 * params.q();
}

}  // namespace detail

// ── Birth ────────────────────────────────────────────────────────────────────

inline MoveProposal propose_birth(const ModelState& current,
                                  const SamcState& samc,
                                  const ModelConfig& config,
                                  const Hyper& hyper, SegmentDataCache& cache,
                                  Rng& rng, double pr_birth) {
  MoveProposal prop;
  prop.kind = MoveKind::birth;
  const int l = current.segments();

  std::vector<int> splittable;
  for (int z = 0; z < l; ++z)
    if (current.partition.segment_length(z) >= 2 * config.t_min)
      splittable.push_back(z);
  const int z = splittable[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(splittable.size()) - 1))];
  const std::int64_t lo = current.partition.xi[z] + config.t_min;
  const std::int64_t hi = current.partition.xi[z + 1] - config.t_min;
  const std::int64_t slots = hi - lo + 1;
  const std::int64_t t_star = lo + rng.uniform_int(0, slots - 1);

  double log_q_fwd = std::log(pr_birth) -
                     std::log(static_cast<double>(splittable.size())) -
                     std::log(static_cast<double>(slots));

  const SegmentParams& parent = current.params[z];
  SegmentParams child1 = parent;
  SegmentParams child2 = parent;
  const int n_u = detail::split_scale_parameters(parent, child1, child2,
                                                 config.split_margin, rng);
  log_q_fwd -= n_u * std::log(1.0 - 2.0 * config.split_margin);

  log_q_fwd += sample_hyper_g(child1, hyper, &rng);
  log_q_fwd += sample_hyper_g(child2, hyper, &rng);

  // Both children's coefficient proposals are seeded with the parent's
  // coefficients (still installed from the copy above).
  auto data1 = cache.get(current.partition.xi[z], t_star);
  auto data2 = cache.get(t_star, current.partition.xi[z + 1]);
  SegmentWorkspace ws1, ws2;
  log_q_fwd += propose_coefficients(*data1, child1, ws1,
                                    current.noise.sigma2, &rng);
  log_q_fwd += propose_coefficients(*data2, child2, ws2,
                                    current.noise.sigma2, &rng);

  Partition dest = current.partition;
  dest.xi.insert(dest.xi.begin() + z + 1, t_star);

  // Reverse direction: a death at the destination picks this very point and
  // rebuilds the parent, whose merged scales equal the parent's exactly and
  // whose coefficient proposal is seeded with the children's average.
  const JumpPlan dest_plan = plan_jump(dest, config);
  double log_q_rev = std::log(dest_plan.pr_death) -
                     std::log(static_cast<double>(l));
  {
    SegmentParams parent_replay = parent;
    log_q_rev += sample_hyper_g(parent_replay, hyper, nullptr, &parent.g_re,
                                &parent.g_im);
  }
  {
    SegmentParams parent_replay = parent;
    parent_replay.alpha = 0.5 * (child1.alpha + child2.alpha);
    parent_replay.beta = 0.5 * (child1.beta + child2.beta);
    SegmentWorkspace ws_replay;
    log_q_rev += propose_coefficients(*current.data[z], parent_replay,
                                      ws_replay, current.noise.sigma2, nullptr,
                                      &parent.alpha, &parent.beta);
  }

  const double ll_parent = collapsed_segment_loglik(*current.data[z],
                                                    current.ws[z],
                                                    current.noise.sigma2);
  const double ll_children =
      collapsed_segment_loglik(*data1, ws1, current.noise.sigma2) +
      collapsed_segment_loglik(*data2, ws2, current.noise.sigma2);
  const double prior_delta =
      partition_log_prior(dest, config.t_min, config.l_max) -
      partition_log_prior(current.partition, config.t_min, config.l_max) +
      log_collapsed_prior(child1, hyper) + log_collapsed_prior(child2, hyper) -
      log_collapsed_prior(parent, hyper);

  prop.theta_term = samc.theta(l - 1) - samc.theta(l);
  prop.delta_loglik = ll_children - ll_parent;
  prop.delta_log_prior = prior_delta;
  prop.log_q_forward = log_q_fwd;
  prop.log_q_reverse = log_q_rev;
  prop.log_jacobian =
      detail::log_split_jacobian(child1, child2, config.jacobian);
  prop.log_accept = prop.theta_term + prop.delta_loglik +
                    prop.delta_log_prior + prop.log_q_reverse -
                    prop.log_q_forward + prop.log_jacobian;
  prop.partition = std::move(dest);
  prop.replace_first = z;
  prop.replace_count = 1;
  prop.inserted.push_back({std::move(data1), std::move(child1),
                           std::move(ws1)});
  prop.inserted.push_back({std::move(data2), std::move(child2),
                           std::move(ws2)});
  prop.feasible = true;
  return prop;
}

// ── Death ────────────────────────────────────────────────────────────────────

inline MoveProposal propose_death(const ModelState& current,
                                  const SamcState& samc,
                                  const ModelConfig& config,
                                  const Hyper& hyper, SegmentDataCache& cache,
                                  Rng& rng, double pr_death) {
  MoveProposal prop;
  prop.kind = MoveKind::death;
  const int l = current.segments();
  const int m =
      1 + static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(l) - 2));
  const int z = m - 1;  // left child
  const SegmentParams& child1 = current.params[z];
  const SegmentParams& child2 = current.params[z + 1];

  // The reverse birth must be able to produce these children; components
  // whose implied split factor falls outside (a, 1−a) cannot be merged.
  if (!detail::merge_in_range(child1, child2, config.split_margin))
    return prop;  // infeasible: immediate rejection

  double log_q_fwd = std::log(pr_death) -
                     std::log(static_cast<double>(l - 1));

  SegmentParams merged = child1;
  merged.tau2_re = (child1.tau2_re.cwiseProduct(child2.tau2_re)).cwiseSqrt();
  merged.tau2_im = (child1.tau2_im.cwiseProduct(child2.tau2_im)).cwiseSqrt();
  merged.phi_re = (child1.phi_re.cwiseProduct(child2.phi_re)).cwiseSqrt();
  merged.phi_im = (child1.phi_im.cwiseProduct(child2.phi_im)).cwiseSqrt();

  log_q_fwd += sample_hyper_g(merged, hyper, &rng);

  // The merged coefficient proposal is seeded with the children's average.
  merged.alpha = 0.5 * (child1.alpha + child2.alpha);
  merged.beta = 0.5 * (child1.beta + child2.beta);
  auto data_merged =
      cache.get(current.partition.xi[z], current.partition.xi[m + 1]);
  SegmentWorkspace ws_merged;
  log_q_fwd += propose_coefficients(*data_merged, merged, ws_merged,
                                    current.noise.sigma2, &rng);

  Partition dest = current.partition;
  dest.xi.erase(dest.xi.begin() + m);

  const JumpPlan dest_plan = plan_jump(dest, config);
  int dest_splittable = dest_plan.splittable;
  const std::int64_t merged_len = dest.segment_length(z);
  const std::int64_t slots = merged_len - 2 * config.t_min + 1;
  double log_q_rev = std::log(dest_plan.pr_birth) -
                     std::log(static_cast<double>(dest_splittable)) -
                     std::log(static_cast<double>(slots));
  log_q_rev -= detail::count_scale_components(child1) *
               std::log(1.0 - 2.0 * config.split_margin);
  {
    SegmentParams replay = child1;
    log_q_rev += sample_hyper_g(replay, hyper, nullptr, &child1.g_re,
                                &child1.g_im);
    replay = child2;
    log_q_rev += sample_hyper_g(replay, hyper, nullptr, &child2.g_re,
                                &child2.g_im);
  }
  {
    // Reverse birth: each child's coefficient proposal is seeded with the
    // merged segment's proposed coefficients.
    SegmentParams replay = child1;
    replay.alpha = merged.alpha;
    replay.beta = merged.beta;
    SegmentWorkspace ws_replay;
    log_q_rev += propose_coefficients(*current.data[z], replay, ws_replay,
                                      current.noise.sigma2, nullptr,
                                      &child1.alpha, &child1.beta);
    replay = child2;
    replay.alpha = merged.alpha;
    replay.beta = merged.beta;
    log_q_rev += propose_coefficients(*current.data[z + 1], replay, ws_replay,
                                      current.noise.sigma2, nullptr,
                                      &child2.alpha, &child2.beta);
  }

  const double ll_children =
      collapsed_segment_loglik(*current.data[z], current.ws[z],
                               current.noise.sigma2) +
      collapsed_segment_loglik(*current.data[z + 1], current.ws[z + 1],
                               current.noise.sigma2);
  const double ll_merged =
      collapsed_segment_loglik(*data_merged, ws_merged, current.noise.sigma2);
  const double prior_delta =
      partition_log_prior(dest, config.t_min, config.l_max) -
      partition_log_prior(current.partition, config.t_min, config.l_max) +
      log_collapsed_prior(merged, hyper) - log_collapsed_prior(child1, hyper) -
      log_collapsed_prior(child2, hyper);

  prop.theta_term = samc.theta(l - 1) - samc.theta(l - 2);
  prop.delta_loglik = ll_merged - ll_children;
  prop.delta_log_prior = prior_delta;
  prop.log_q_forward = log_q_fwd;
  prop.log_q_reverse = log_q_rev;
  prop.log_jacobian =
      -detail::log_split_jacobian(child1, child2, config.jacobian);
  prop.log_accept = prop.theta_term + prop.delta_loglik +
                    prop.delta_log_prior + prop.log_q_reverse -
                    prop.log_q_forward + prop.log_jacobian;
  prop.partition = std::move(dest);
  prop.replace_first = z;
  prop.replace_count = 2;
  prop.inserted.push_back({std::move(data_merged), std::move(merged),
                           std::move(ws_merged)});
  prop.feasible = true;
  return prop;
}

// ── Between-model dispatch ───────────────────────────────────────────────────

inline MoveProposal propose_model_jump(const ModelState& current,
                                       const SamcState& samc,
                                       const ModelConfig& config,
                                       const Hyper& hyper,
                                       SegmentDataCache& cache, Rng& rng) {
  const JumpPlan plan = plan_jump(current.partition, config);
  if (plan.pr_birth == 0.0 && plan.pr_death == 0.0) {
    MoveProposal none;
    none.kind = MoveKind::none;
    return none;  // within-model only this iteration
  }
  if (rng.uniform01() < plan.pr_birth)
    return propose_birth(current, samc, config, hyper, cache, rng,
                         plan.pr_birth);
  return propose_death(current, samc, config, hyper, cache, rng,
                       plan.pr_death);
}

// ── Within-model relocation ──────────────────────────────────────────────────

inline MoveProposal propose_within(const ModelState& current,
                                   const ModelConfig& config,
                                   const Hyper& hyper, SegmentDataCache& cache,
                                   Rng& rng) {
  MoveProposal prop;
  prop.kind = MoveKind::within;
  const int l = current.segments();
  const int m =
      1 + static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(l) - 2));
  const std::int64_t t_cur = current.partition.xi[m];
  const std::int64_t lo = current.partition.xi[m - 1] + config.t_min;
  const std::int64_t hi = current.partition.xi[m + 1] - config.t_min;
  const std::int64_t range = hi - lo;  // long-range support is [lo, hi)

  std::int64_t t_new;
  const double p = config.relocation_mix;
  if (rng.uniform01() < p) {
    if (range <= 0) return prop;  // no long-range slots: abort as a rejection
    t_new = lo + rng.uniform_int(0, range - 1);
  } else {
    t_new = t_cur + rng.uniform_int(-1, 1);
  }
  if (t_new < lo || t_new > hi) return prop;  // stepped outside legality

  // The relocation kernel is a mixture of the long-range uniform (half-open
  // support) and the stay-or-step draw; it is evaluated explicitly in both
  // directions because the endpoint t = hi lies outside the long-range
  // support while still being legal.
  auto mixture_density = [&](std::int64_t to, std::int64_t from) {
    double density = 0.0;
    if (range > 0 && to >= lo && to < hi)
      density += p / static_cast<double>(range);
    if (std::llabs(to - from) <= 1) density += (1.0 - p) / 3.0;
    return density;
  };
  const double fwd_kernel = mixture_density(t_new, t_cur);
  const double rev_kernel = mixture_density(t_cur, t_new);
  if (rev_kernel == 0.0) return prop;  // unreachable back: reject outright

  const double log_q_kernel_fwd = std::log(fwd_kernel);
  const double log_q_kernel_rev = std::log(rev_kernel);

  // Both segments' coefficients are redrawn through the conditional scans,
  // seeded with the current values; smoothing and shrinkage scales ride
  // across unchanged (their dimensions do not depend on the extent), so
  // their priors cancel and the ratio is decided by the collapsed
  // likelihood, the coefficient prior, and the scan densities.
  SegmentParams c1 = current.params[m - 1];
  SegmentParams c2 = current.params[m];
  auto data1 = cache.get(current.partition.xi[m - 1], t_new);
  auto data2 = cache.get(t_new, current.partition.xi[m + 1]);
  SegmentWorkspace ws1, ws2;
  double log_q_fwd = log_q_kernel_fwd;
  log_q_fwd += propose_coefficients(*data1, c1, ws1, current.noise.sigma2,
                                    &rng);
  log_q_fwd += propose_coefficients(*data2, c2, ws2, current.noise.sigma2,
                                    &rng);

  // Reverse: the mirrored relocation replays the scans at the old extents,
  // seeded with the just-proposed coefficients, evaluated at the current
  // values.
  double log_q_rev = log_q_kernel_rev;
  {
    SegmentParams replay = current.params[m - 1];
    replay.alpha = c1.alpha;
    replay.beta = c1.beta;
    SegmentWorkspace ws_replay;
    log_q_rev += propose_coefficients(*current.data[m - 1], replay, ws_replay,
                                      current.noise.sigma2, nullptr,
                                      &current.params[m - 1].alpha,
                                      &current.params[m - 1].beta);
    replay = current.params[m];
    replay.alpha = c2.alpha;
    replay.beta = c2.beta;
    log_q_rev += propose_coefficients(*current.data[m], replay, ws_replay,
                                      current.noise.sigma2, nullptr,
                                      &current.params[m].alpha,
                                      &current.params[m].beta);
  }

  Partition dest = current.partition;
  dest.xi[m] = t_new;

  const double ll_old =
      collapsed_segment_loglik(*current.data[m - 1], current.ws[m - 1],
                               current.noise.sigma2) +
      collapsed_segment_loglik(*current.data[m], current.ws[m],
                               current.noise.sigma2);
  const double ll_new =
      collapsed_segment_loglik(*data1, ws1, current.noise.sigma2) +
      collapsed_segment_loglik(*data2, ws2, current.noise.sigma2);
  const double prior_delta =
      partition_log_prior(dest, config.t_min, config.l_max) -
      partition_log_prior(current.partition, config.t_min, config.l_max) +
      log_collapsed_prior(c1, hyper) + log_collapsed_prior(c2, hyper) -
      log_collapsed_prior(current.params[m - 1], hyper) -
      log_collapsed_prior(current.params[m], hyper);

  prop.theta_term = 0.0;
  prop.delta_loglik = ll_new - ll_old;
  prop.delta_log_prior = prior_delta;
  prop.log_q_forward = log_q_fwd;
  prop.log_q_reverse = log_q_rev;
  prop.log_jacobian = 0.0;
  prop.log_accept = prop.delta_loglik + prop.delta_log_prior +
                    prop.log_q_reverse - prop.log_q_forward;
  prop.partition = std::move(dest);
  prop.replace_first = m - 1;
  prop.replace_count = 2;
  prop.inserted.push_back({std::move(data1), std::move(c1), std::move(ws1)});
  prop.inserted.push_back({std::move(data2), std::move(c2), std::move(ws2)});
  prop.feasible = true;
  return prop;
}

// ── Gibbs refresh (within-model pass, part two) ──────────────────────────────

// Per-segment Gibbs updates between moves.  At a single segment the full
// sweep runs (factors, coefficients, and the whole scale hierarchy); with
// multiple segments the coefficients move only through the relocation and
// birth/death proposals, and the refresh covers the scale hierarchy plus the
// shared noise.  Both forms draw the factors from their exact conditional
// first: the moves score states on the factor-collapsed posterior and never
// read the stored factors, but the shared-noise update conditions on a
// concrete factor draw (instantiate, update, discard — the collapsed chain's
// marginal is unchanged), and archived draws then carry a coherent state.
inline void gibbs_refresh(ModelState& state, const Hyper& hyper, Rng& rng,
                          bool full_sweep) {
  for (std::size_t z = 0; z < state.params.size(); ++z) {
    sample_factors(*state.data[z], state.params[z], state.ws[z],
                   state.noise.sigma2, &rng);
    if (full_sweep) {
      sample_real_coeffs(*state.data[z], state.params[z], state.ws[z],
                         state.noise.sigma2, &rng);
      sample_imag_coeffs(*state.data[z], state.params[z], state.ws[z],
                         state.noise.sigma2, &rng);
    }
    sample_smoothing(state.params[z], hyper, rng);
    sample_hyper_g(state.params[z], hyper, &rng);
    sample_shrinkage(state.params[z], hyper, rng);
  }
  NoiseSufficients stats = NoiseSufficients::zero(
      static_cast<int>(state.noise.sigma2.size()));
  for (std::size_t z = 0; z < state.data.size(); ++z)
    stats.accumulate(*state.data[z], state.ws[z]);
  sample_noise(state.noise, stats, hyper, rng);
}

// ── Chain driver ─────────────────────────────────────────────────────────────

struct ChainDraw {
  std::int64_t iteration = 0;
  const ModelState* state = nullptr;
  const Eigen::VectorXd* theta = nullptr;
  double loglik = 0.0;
  MoveKind between_kind = MoveKind::none;
  bool between_accepted = false;
  bool within_attempted = false;
  bool within_accepted = false;
};

using DrawSink = std::function<void(const ChainDraw&)>;

struct ChainDiagnostics {
  std::int64_t iterations = 0;
  std::int64_t birth_attempts = 0, birth_accepts = 0;
  std::int64_t death_attempts = 0, death_accepts = 0;
  std::int64_t within_attempts = 0, within_accepts = 0;
  Eigen::VectorXd theta;
  std::vector<std::int64_t> visits;  // per model size
};

inline ChainDiagnostics run_chain(const Eigen::MatrixXd& values,
                                  const ModelConfig& config,
                                  const Hyper& hyper, std::int64_t iterations,
                                  std::int64_t burn_in, std::uint64_t seed,
                                  const DrawSink& sink,
                                  std::ostream* progress = nullptr,
                                  std::int64_t progress_every = 500) {
  hyper.validate();
  config.validate(values.cols());
  if (iterations <= burn_in || burn_in < 0)
    throw std::invalid_argument(
        "run_chain: iterations must exceed a nonnegative burn-in");

  SegmentDataCache cache(values, hyper.s);
  ModelState state = ModelState::init(values, hyper, cache);
  SamcState samc = SamcState::init(config);
  Rng rng(seed);

  ChainDiagnostics diag;
  diag.visits.assign(config.l_max, 0);

  for (std::int64_t j = 1; j <= iterations; ++j) {
    MoveKind between_kind = MoveKind::none;
    bool between_accepted = false;
    {
      MoveProposal jump =
          propose_model_jump(state, samc, config, hyper, cache, rng);
      between_kind = jump.kind;
      if (jump.kind == MoveKind::birth) ++diag.birth_attempts;
      if (jump.kind == MoveKind::death) ++diag.death_attempts;
      if (jump.feasible &&
          std::log(rng.uniform01()) < jump.log_accept) {
        between_accepted = true;
        if (jump.kind == MoveKind::birth) ++diag.birth_accepts;
        if (jump.kind == MoveKind::death) ++diag.death_accepts;
        apply_proposal(state, std::move(jump));
      }
    }
    samc.update(state.segments());
    ++diag.visits[state.segments() - 1];

    bool within_attempted = false;
    bool within_accepted = false;
    if (state.segments() > 1) {
      within_attempted = true;
      ++diag.within_attempts;
      MoveProposal relocation =
          propose_within(state, config, hyper, cache, rng);
      if (relocation.feasible &&
          std::log(rng.uniform01()) < relocation.log_accept) {
        within_accepted = true;
        ++diag.within_accepts;
        apply_proposal(state, std::move(relocation));
      }
    }
    gibbs_refresh(state, hyper, rng, /*full_sweep=*/state.segments() == 1);

    if (j > burn_in && sink) {
      ChainDraw draw;
      draw.iteration = j;
      draw.state = &state;
      draw.theta = &samc.theta;
      draw.loglik = state.loglik();
      draw.between_kind = between_kind;
      draw.between_accepted = between_accepted;
      draw.within_attempted = within_attempted;
      draw.within_accepted = within_accepted;
      sink(draw);
    }
    if (progress != nullptr && (j % progress_every == 0 || j == iterations)) {
      (*progress) << "iter " << j << "/" << iterations << " L="
                  << state.segments() << " loglik=" << state.loglik()
                  << " accept[b/d/w]=" << diag.birth_accepts << "/"
                  << diag.death_accepts << "/" << diag.within_accepts << "\n";
    }
  }
  diag.iterations = iterations;
  diag.theta = samc.theta;
  return diag;
}

}  // namespace specfact
