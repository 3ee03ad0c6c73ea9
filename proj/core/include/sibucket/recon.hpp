#pragma once

#include <span>
#include <string>

#include "sibucket/basis.hpp"
#include "sibucket/sim.hpp"

namespace sibucket {

/// Largest grid (in cells) for which dense kernels are materialized.
inline constexpr std::size_t kMaxKernelCells = std::size_t{1} << 12;

/// sum_m a_m U_m.
Field reconstruct(std::span<const double> counts, const BasisBundle& bundle);
/// Reconstructs from the sampled counts, or from the means when unsampled.
Field reconstruct(const MeasurementRecord& record, const BasisBundle& bundle);

/// The three expansions of the projection P_M X:
/// sum b_m V_m (b = Q a), sum c_m W_m (c = Q2 a) and sum a_m U_m.
struct ProjectionForms {
  Field via_v;
  Field via_w;
  Field via_u;
  std::vector<double> b;
  std::vector<double> c;
  double max_discrepancy = 0.0;  ///< largest pointwise difference between forms
};
ProjectionForms projection_forms(std::span<const double> counts, const BasisBundle& bundle);

enum class KernelKind { green, measurement, reconstruction };
std::string to_string(KernelKind kind);

/// Dense kernel K(r_i, r_j) sampled at cell centres. Applying it to a field
/// uses the normalized integral (1/|region|) sum_j K(r_i, r_j) X(r_j) cell_area.
struct KernelMatrix {
  KernelKind kind;
  Grid grid;
  Matrix entries;
};

/// G(r, r') = sum_m V_m(r) V_m(r').
KernelMatrix green_kernel(const BasisBundle& bundle);
/// A(r, r') = sum_m W_m(r) W_m(r').
KernelMatrix measurement_kernel(const PatternSet& patterns);
/// R(r, r') = sum_m U_m(r) U_m(r').
KernelMatrix reconstruction_kernel(const BasisBundle& bundle);

Field apply(const KernelMatrix& kernel, const Field& f);
/// Kernel action without materializing the kernel (any grid size).
Field apply_kernel(KernelKind kind, const BasisBundle& bundle, const Field& f);

/// P(r) = sum_m V_m(c) V_m(r) for the centre cell c. Refuses with
/// ConditionError (quoting max_dev) when the Green's function is not shift
/// invariant under `shifts` at `tol`.
Field psf(const BasisBundle& bundle, std::span<const LatticeShift> shifts, double tol = 1e-9);
Field psf(const BasisBundle& bundle, double tol = 1e-9);
/// G(c, r) for an explicit reference cell c; no invariance check.
Field green_row(const BasisBundle& bundle, std::size_t cell);

enum class ReconClass { unclassified, I, II, III };
std::string to_string(ReconClass label);

/// Matrix r_mm' mapping measured counts to W-expansion coefficients
/// (c = R a), with its qualitative class.
struct ReconMatrix {
  Matrix r;
  ReconClass label = ReconClass::unclassified;
  std::string evidence;
};

/// r = Q2, label unset.
ReconMatrix recon_matrix(const BasisBundle& bundle);

/// Class I if R R^T = c I (c > 0) within tol * c; else II if every entry is
/// >= -tol * max|r|; else III. The gates are heuristic thresholds chosen here.
ReconMatrix classify(ReconMatrix rm, double tol = 1e-9);

}  // namespace sibucket
