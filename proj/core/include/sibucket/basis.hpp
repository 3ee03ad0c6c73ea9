#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "sibucket/grid.hpp"
#include "sibucket/patterns.hpp"

namespace sibucket {

using Matrix = Eigen::MatrixXd;

/// Symmetric matrix of illumination inner products <W_m, W_m'>.
class GramMatrix {
 public:
  explicit GramMatrix(Matrix entries);

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  /// Ascending eigenvalues.
  Eigen::VectorXd eigenvalues() const;

 private:
  Matrix entries_;
};

/// entries(m, m') = n_bar^2 <T_m, T_m'>; the upper triangle is computed once
/// and mirrored so the matrix is exactly symmetric.
GramMatrix gram(const PatternSet& patterns);

/// Number of eigenvalues above rel_tol times the largest eigenvalue.
std::size_t independence_rank(const GramMatrix& g, double rel_tol = 1e-10);

/// Orthonormal, biorthogonal and illumination vectors for one pattern set.
///
/// Q = (W'W)^{-1/2} and Q2 = (W'W)^{-1}; V_m = sum_m' Q(m,m') W_m' and
/// U_m = sum_m' Q2(m,m') W_m'. The U vectors are empty for a bundle built
/// by orthonormalize_polar().
struct BasisBundle {
  Grid grid;
  double n_bar = 1.0;
  std::vector<Field> W;
  std::vector<Field> V;
  std::vector<Field> U;
  Matrix Q;
  Matrix Q2;
  /// Common length w when <W_m, W_m'> = w^2 delta_mm'.
  std::optional<double> w_scale;

  std::size_t size() const noexcept { return W.size(); }
  bool has_biorthogonal() const noexcept { return !U.empty(); }
  /// S_m = n_bar U_m, biorthogonal to the masks T_m.
  Field S(std::size_t m) const { return n_bar * U.at(m); }
  std::vector<Field> S_all() const;
};

/// Polar orthonormalization via symmetric eigendecomposition of the Gram
/// matrix. Throws SingularSetError when the rank at rel_tol is below M.
BasisBundle orthonormalize_polar(const PatternSet& patterns, double rel_tol = 1e-10);

/// orthonormalize_polar() plus Q2 and the biorthogonal vectors U_m.
BasisBundle biorthogonal(const PatternSet& patterns, double rel_tol = 1e-10);

struct Condition1Result {
  bool holds = false;
  std::vector<double> alpha;  ///< alpha_m = <1, U_m>
  double residual = 0.0;      ///< norm(1 - sum alpha_m W_m)
};

/// Projects the constant field onto span{W_m}.
Condition1Result check_condition1(const BasisBundle& bundle, double tol = 1e-9);
Condition1Result check_condition1(const PatternSet& patterns, double tol = 1e-9);

/// Whole-cell translation (in cells) of both kernel arguments.
struct LatticeShift {
  long dx = 0;
  long dy = 0;
};

enum class ShiftBoundary {
  clip,      ///< only pairs whose shifted points stay inside the region
  periodic,  ///< shifted points wrap around the region
};

struct Condition2Result {
  bool holds = false;
  /// max |G(r+h, r'+h) - G(r, r')| / max |G|
  double max_dev = 0.0;
  /// f_M(r) = sum_m V_m(r)^2 = G(r, r); constant (and equal to M) under
  /// shift invariance.
  double f_min = 0.0;
  double f_max = 0.0;
  double f_mean = 0.0;
  std::size_t pairs_checked = 0;
};

/// Samples the Green's function G(r, r') = sum_m V_m(r) V_m(r') and tests it
/// for invariance under the given shifts. Throws ParameterError on an empty
/// shift list.
Condition2Result check_condition2(const BasisBundle& bundle, std::span<const LatticeShift> shifts,
                                  double tol = 1e-9, ShiftBoundary boundary = ShiftBoundary::clip);

/// One-cell shifts along x and y.
std::vector<LatticeShift> unit_shifts();

}  // namespace sibucket
