/* partition.hpp — time-axis partitions for piecewise-stationary analysis
 *
 * A partition of T observations into L segments is stored as its breakpoint
 * vector ξ = (ξ₀, …, ξ_L) with ξ₀ = 0 < ξ₁ < … < ξ_L = T; segment ℓ covers
 * the absolute time indices (ξ_{ℓ−1}, ξ_ℓ].  Every segment must hold at
 * least t_min points for the local Fourier statistics to be well defined.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace specfact {

struct Partition {
  std::vector<std::int64_t> xi;  // size L+1, xi.front() = 0, xi.back() = T

  int segments() const { return static_cast<int>(xi.size()) - 1; }

  std::int64_t length() const { return xi.back(); }

  std::int64_t segment_length(int l) const {
    return xi[static_cast<std::size_t>(l) + 1] - xi[static_cast<std::size_t>(l)];
  }

  // Absolute-time bounds of segment l (0-based): times a+1 … b.
  std::int64_t segment_start(int l) const {
    return xi[static_cast<std::size_t>(l)];
  }
  std::int64_t segment_end(int l) const {
    return xi[static_cast<std::size_t>(l) + 1];
  }

  // Segment midpoint rescaled to (0, 1]: u_ℓ = (ξ_ℓ + ξ_{ℓ−1}) / (2T).
  double midpoint_u(int l) const {
    return static_cast<double>(segment_start(l) + segment_end(l)) /
           (2.0 * static_cast<double>(length()));
  }

  // 0-based index of the segment containing absolute time t ∈ {1, …, T}.
  int segment_containing(std::int64_t t) const {
    if (t < 1 || t > length())
      throw std::out_of_range("Partition::segment_containing: time " +
                              std::to_string(t) + " outside 1.." +
                              std::to_string(length()));
    for (int l = 0; l < segments(); ++l)
      if (t <= segment_end(l)) return l;
    return segments() - 1;  // unreachable; keeps the compiler satisfied
  }

  static Partition whole(std::int64_t total_length) {
    return Partition{{0, total_length}};
  }
};

// Validates shape, ordering, and the minimum segment length.
inline void validate_partition(const Partition& partition, std::int64_t total_length,
                               std::int64_t t_min) {
  const auto& xi = partition.xi;
  if (xi.size() < 2)
    throw std::invalid_argument(
        "validate_partition: need at least the two boundary breakpoints");
  if (xi.front() != 0)
    throw std::invalid_argument("validate_partition: xi[0] must be 0");
  if (xi.back() != total_length)
    throw std::invalid_argument(
        "validate_partition: xi[L] must equal the series length " +
        std::to_string(total_length));
  for (std::size_t i = 1; i < xi.size(); ++i) {
    if (xi[i] <= xi[i - 1])
      throw std::invalid_argument(
          "validate_partition: breakpoints must be strictly increasing");
    if (xi[i] - xi[i - 1] < t_min)
      throw std::invalid_argument(
          "validate_partition: segment " + std::to_string(i) + " has length " +
          std::to_string(xi[i] - xi[i - 1]) + " below the minimum " +
          std::to_string(t_min));
  }
}

}  // namespace specfact
