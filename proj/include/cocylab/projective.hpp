#ifndef COCYLAB_PROJECTIVE_HPP
#define COCYLAB_PROJECTIVE_HPP

#include "cocylab/common.hpp"

#include <cstddef>
#include <vector>

namespace cocylab {

/// |sin angle(u, v)| = ||u ^ v|| / (||u|| ||v||).
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar sine_distance(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  using std::sqrt;
  using std::abs;
  const Scalar nu = u.squaredNorm();
  const Scalar nv = v.squaredNorm();
  if (u.size() == 2) return abs(u(0) * v(1) - u(1) * v(0)) / sqrt(nu * nv);
  const Scalar dot = u.dot(v);
  // Lagrange identity; clamp the rounding below zero.
  const Scalar wedge2 = std::max(nu * nv - dot * dot, Scalar(0));
  return sqrt(wedge2 / (nu * nv));
}

/// Finite partition of projective space P(R^d) into cells with unit
/// representatives. d = 1 is a single point; d = 2 uses equal angle cells
/// with centers (c + 1/2) pi / G; d = 3 a Fibonacci lattice on the upper
/// hemisphere; d >= 4 seeded Gaussian directions with brute-force lookup.
class ProjectiveGrid {
 public:
  static ProjectiveGrid make(int d, std::size_t cells);
  /// Default resolution: 720 cells for d = 2, 2e4 for d = 3, 4096 beyond.
  static ProjectiveGrid standard(int d);

  int dim() const { return dim_; }
  std::size_t size() const { return reps_.size(); }
  const VectorXd& rep(std::size_t c) const { return reps_[c]; }
  /// Upper bound on the sine-metric diameter of a cell.
  double diameter() const { return diameter_; }

  /// Index of the cell whose representative is closest to the line of v.
  std::size_t nearest(const VectorXd& v) const;

 private:
  int dim_ = 1;
  std::vector<VectorXd> reps_;
  double diameter_ = 0.0;
  double band_ = 1.0;  // d = 3 search half-width in z
};

}  // namespace cocylab

#endif  // COCYLAB_PROJECTIVE_HPP
