#include "sibucket/recon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sibucket/error.hpp"
#include "sibucket/parallel.hpp"

namespace sibucket {

namespace {

Matrix rows_of(const std::vector<Field>& fields) {
  Matrix out(static_cast<Eigen::Index>(fields.size()), static_cast<Eigen::Index>(fields.front().size()));
  for (std::size_t m = 0; m < fields.size(); ++m) {
    const auto v = fields[m].values();
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = v[i];
  }
  return out;
}

const std::vector<Field>& kernel_fields(KernelKind kind, const BasisBundle& bundle) {
  switch (kind) {
    case KernelKind::green: return bundle.V;
    case KernelKind::measurement: return bundle.W;
    case KernelKind::reconstruction:
      if (!bundle.has_biorthogonal()) throw ParameterError("reconstruction kernel needs biorthogonal vectors");
      return bundle.U;
  }
  return bundle.V;
}

KernelMatrix outer_sum(KernelKind kind, const Grid& grid, const std::vector<Field>& fields) {
  if (grid.cell_count() > kMaxKernelCells) {
    throw ParameterError(to_string(kind) + " kernel: grid of " + std::to_string(grid.cell_count()) +
                         " cells exceeds the dense limit; use apply_kernel()");
  }
  const Matrix rows = rows_of(fields);
  Matrix k = rows.transpose() * rows;
  // Exact symmetry: mirror the upper triangle.
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i);
  }
  return {kind, grid, std::move(k)};
}

std::vector<double> times(const Matrix& a, std::span<const double> v) {
  std::vector<double> out(static_cast<std::size_t>(a.rows()), 0.0);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += a(i, j) * v[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

}  // namespace

Field reconstruct(std::span<const double> counts, const BasisBundle& bundle) {
  if (!bundle.has_biorthogonal()) throw ParameterError("reconstruct: bundle lacks biorthogonal vectors");
  if (counts.size() != bundle.size()) {
    throw StructuralError("reconstruct: " + std::to_string(counts.size()) + " counts for " +
                          std::to_string(bundle.size()) + " patterns");
  }
  return linear_combination(counts, bundle.U);
}

Field reconstruct(const MeasurementRecord& record, const BasisBundle& bundle) {
  const auto counts = record.counts();
  return reconstruct(counts, bundle);
}

ProjectionForms projection_forms(std::span<const double> counts, const BasisBundle& bundle) {
  Field via_u = reconstruct(counts, bundle);
  std::vector<double> b = times(bundle.Q, counts);
  std::vector<double> c = times(bundle.Q2, counts);
  Field via_v = linear_combination(b, bundle.V);
  Field via_w = linear_combination(c, bundle.W);
  double worst = 0.0;
  for (std::size_t i = 0; i < via_u.size(); ++i) {
    worst = std::max({worst, std::abs(via_u[i] - via_v[i]), std::abs(via_u[i] - via_w[i])});
  }
  return {std::move(via_v), std::move(via_w), std::move(via_u), std::move(b), std::move(c), worst};
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::green: return "green";
    case KernelKind::measurement: return "measurement";
    case KernelKind::reconstruction: return "reconstruction";
  }
  return "green";
}

KernelMatrix green_kernel(const BasisBundle& bundle) { return outer_sum(KernelKind::green, bundle.grid, bundle.V); }

KernelMatrix measurement_kernel(const PatternSet& patterns) {
  std::vector<Field> w;
  w.reserve(patterns.size());
  for (std::size_t m = 0; m < patterns.size(); ++m) w.push_back(patterns.illumination(m));
  return outer_sum(KernelKind::measurement, patterns.grid(), w);
}

KernelMatrix reconstruction_kernel(const BasisBundle& bundle) {
  return outer_sum(KernelKind::reconstruction, bundle.grid, kernel_fields(KernelKind::reconstruction, bundle));
}

Field apply(const KernelMatrix& kernel, const Field& f) {
  require_same_grid(kernel.grid, f.grid(), "apply kernel");
  const auto n = static_cast<double>(f.size());
  std::vector<double> out(f.size());
  parallel_for(f.size(), [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      s += kernel.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * f[j];
    }
    out[i] = s / n;
  });
  return Field(f.grid(), std::move(out));
}

Field apply_kernel(KernelKind kind, const BasisBundle& bundle, const Field& f) {
  require_same_grid(bundle.grid, f.grid(), "apply_kernel");
  const auto& fields = kernel_fields(kind, bundle);
  std::vector<double> coeff(fields.size());
  for (std::size_t m = 0; m < fields.size(); ++m) coeff[m] = inner(fields[m], f);
  return linear_combination(coeff, fields);
}

Field green_row(const BasisBundle& bundle, std::size_t cell) {
  if (cell >= bundle.grid.cell_count()) throw ParameterError("green_row: cell out of range");
  std::vector<double> weights(bundle.size());
  for (std::size_t m = 0; m < bundle.size(); ++m) weights[m] = bundle.V[m][cell];
  return linear_combination(weights, bundle.V);
}

Field psf(const BasisBundle& bundle, std::span<const LatticeShift> shifts, double tol) {
  const auto c2 = check_condition2(bundle, shifts, tol);
  if (!c2.holds) {
    char msg[160];
    std::snprintf(msg, sizeof(msg), "psf: Green's function is not shift invariant (max_dev %.3g > tol %.3g)",
                  c2.max_dev, tol);
    throw ConditionError(msg);
  }
  return green_row(bundle, bundle.grid.center_cell());
}

Field psf(const BasisBundle& bundle, double tol) {
  const auto shifts = unit_shifts();
  return psf(bundle, shifts, tol);
}

std::string to_string(ReconClass label) {
  switch (label) {
    case ReconClass::I: return "I";
    case ReconClass::II: return "II";
    case ReconClass::III: return "III";
    case ReconClass::unclassified: return "unclassified";
  }
  return "unclassified";
}

ReconMatrix recon_matrix(const BasisBundle& bundle) {
  if (!bundle.has_biorthogonal()) throw ParameterError("recon_matrix: bundle lacks Q2");
  return {bundle.Q2, ReconClass::unclassified, {}};
}

ReconMatrix classify(ReconMatrix rm, double tol) {
  const Matrix& r = rm.r;
  const auto M = static_cast<double>(r.rows());
  const Matrix rrt = r * r.transpose();
  const double c = rrt.trace() / M;
  const double dev = (rrt - c * Matrix::Identity(r.rows(), r.cols())).cwiseAbs().maxCoeff();
  const double scale = r.cwiseAbs().maxCoeff();
  const double most_negative = r.minCoeff();
  std::size_t negatives = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r.data()[i] < -tol * scale) ++negatives;
  }

  char buf[256];
  if (c > 0.0 && dev <= tol * c) {
    rm.label = ReconClass::I;
    std::snprintf(buf, sizeof(buf), "R R^T = c I with c = %.17g (max deviation %.3g); gates are heuristic", c, dev);
  } else if (negatives == 0) {
    rm.label = ReconClass::II;
    std::snprintf(buf, sizeof(buf),
                  "not orthogonal-like (R R^T deviation %.3g); all entries >= -tol*max|r| (min %.17g); "
                  "gates are heuristic",
                  dev, most_negative);
  } else {
    rm.label = ReconClass::III;
    std::snprintf(buf, sizeof(buf),
                  "not orthogonal-like (R R^T deviation %.3g); %zu of %zu entries negative (min %.17g); "
                  "gates are heuristic",
                  dev, negatives, static_cast<std::size_t>(r.size()), most_negative);
  }
  rm.evidence = buf;
  return rm;
}

}  // namespace sibucket
