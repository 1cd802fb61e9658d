/* spectral_grid.hpp — dense time-frequency grid of spectral matrices
 *
 * A SpectralMatrixGrid stores one P×P complex matrix per (u, ω) cell on
 * explicit rescaled-time and frequency axes, cell-major with frequency
 * fastest.  It is the common export format for estimators and the input to
 * the error metrics, which require both operands on an identical grid.
 */
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace specfact {

struct SpectralMatrixGrid {
  Eigen::VectorXd u;      // rescaled time points, nondecreasing in [0, 1]
  Eigen::VectorXd omega;  // frequencies in [0, 1/2]
  int p = 0;
  std::vector<Eigen::MatrixXcd> cells;  // size u.size()*omega.size()

  Eigen::MatrixXcd& at(Eigen::Index iu, Eigen::Index iw) {
    return cells[static_cast<std::size_t>(iu * omega.size() + iw)];
  }
  const Eigen::MatrixXcd& at(Eigen::Index iu, Eigen::Index iw) const {
    return cells[static_cast<std::size_t>(iu * omega.size() + iw)];
  }

  static SpectralMatrixGrid zeros(Eigen::VectorXd u_points,
                                  Eigen::VectorXd omega_points, int p) {
    SpectralMatrixGrid grid;
    grid.u = std::move(u_points);
    grid.omega = std::move(omega_points);
    grid.p = p;
    grid.cells.assign(
        static_cast<std::size_t>(grid.u.size() * grid.omega.size()),
        Eigen::MatrixXcd::Zero(p, p));
    return grid;
  }

  void validate() const {
    if (p < 1) throw std::invalid_argument("SpectralMatrixGrid: p must be positive");
    if (cells.size() != static_cast<std::size_t>(u.size() * omega.size()))
      throw std::invalid_argument(
          "SpectralMatrixGrid: cell count does not match the axes");
    for (const Eigen::MatrixXcd& cell : cells)
      if (cell.rows() != p || cell.cols() != p)
        throw std::invalid_argument(
            "SpectralMatrixGrid: cell dimensions do not match p");
  }
};

// True when both grids share axes (exactly) and dimension.
inline bool grids_aligned(const SpectralMatrixGrid& a,
                          const SpectralMatrixGrid& b) {
  return a.p == b.p && a.u.size() == b.u.size() &&
         a.omega.size() == b.omega.size() && a.u == b.u && a.omega == b.omega;
}

}  // namespace specfact
