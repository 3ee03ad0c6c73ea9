#include "sibucket/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sibucket/error.hpp"
#include "sibucket/parallel.hpp"

namespace sibucket {

namespace {

// Rows are fields: (M x N) with row m holding the samples of field m.
Matrix to_rows(const std::vector<Field>& fields) {
  const auto M = static_cast<Eigen::Index>(fields.size());
  const auto N = static_cast<Eigen::Index>(fields.front().size());
  Matrix out(M, N);
  for (Eigen::Index m = 0; m < M; ++m) {
    const auto v = fields[static_cast<std::size_t>(m)].values();
    for (Eigen::Index i = 0; i < N; ++i) out(m, i) = v[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<Field> from_rows(const Grid& grid, const Matrix& rows) {
  std::vector<Field> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index m = 0; m < rows.rows(); ++m) {
    std::vector<double> v(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index i = 0; i < rows.cols(); ++i) v[static_cast<std::size_t>(i)] = rows(m, i);
    out.emplace_back(grid, std::move(v));
  }
  return out;
}

std::optional<double> orthogonal_scale(const GramMatrix& g) {
  const auto& e = g.entries();
  const double d0 = e(0, 0);
  double max_off = 0.0;
  double max_diag_dev = 0.0;
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    max_diag_dev = std::max(max_diag_dev, std::abs(e(i, i) - d0));
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      if (i != j) max_off = std::max(max_off, std::abs(e(i, j)));
    }
  }
  constexpr double kTol = 1e-12;
  if (max_off <= kTol * d0 && max_diag_dev <= kTol * d0) return std::sqrt(d0);
  return std::nullopt;
}

struct Decomposition {
  Eigen::VectorXd values;
  Matrix vectors;
};

Decomposition decompose_checked(const GramMatrix& g, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(g.entries());
  if (solver.info() != Eigen::Success) throw SingularSetError("gram: eigendecomposition failed", g.size());
  const Eigen::VectorXd& values = solver.eigenvalues();
  const double largest = values.maxCoeff();
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > rel_tol * largest) ++rank;
  }
  if (rank < g.size()) {
    const std::size_t deficient = g.size() - rank;
    throw SingularSetError("pattern set is linearly dependent: " + std::to_string(deficient) + " of " +
                               std::to_string(g.size()) + " directions below relative tolerance",
                           deficient);
  }
  return {values, solver.eigenvectors()};
}

Matrix spectral_power(const Decomposition& d, double power) {
  Eigen::VectorXd scaled = d.values.array().pow(power).matrix();
  Matrix out = d.vectors * scaled.asDiagonal() * d.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

BasisBundle polar_bundle(const PatternSet& patterns, double rel_tol, bool with_biorthogonal) {
  const GramMatrix g = gram(patterns);
  const Decomposition d = decompose_checked(g, rel_tol);

  BasisBundle bundle{patterns.grid(), patterns.n_bar(), {}, {}, {}, {}, {}, orthogonal_scale(g)};
  bundle.W.reserve(patterns.size());
  for (std::size_t m = 0; m < patterns.size(); ++m) bundle.W.push_back(patterns.illumination(m));

  const Matrix w_rows = to_rows(bundle.W);
  const auto M = static_cast<Eigen::Index>(patterns.size());
  // Orthogonal equal-length sets get the exact scaled identity.
  if (bundle.w_scale) {
    const double w = *bundle.w_scale;
    bundle.Q = Matrix::Identity(M, M) / w;
    if (with_biorthogonal) bundle.Q2 = Matrix::Identity(M, M) / (w * w);
  } else {
    bundle.Q = spectral_power(d, -0.5);
    if (with_biorthogonal) bundle.Q2 = spectral_power(d, -1.0);
  }
  bundle.V = from_rows(bundle.grid, bundle.Q * w_rows);
  if (with_biorthogonal) {
    bundle.U = from_rows(bundle.grid, bundle.Q2 * w_rows);
  }
  return bundle;
}

}  // namespace

GramMatrix::GramMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw StructuralError("gram matrix must be square and non-empty");
  }
}

Eigen::VectorXd GramMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(entries_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

GramMatrix gram(const PatternSet& patterns) {
  const std::size_t M = patterns.size();
  const double scale = patterns.n_bar() * patterns.n_bar();
  Matrix e(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  parallel_for(M, [&](std::size_t i) {
    for (std::size_t j = i; j < M; ++j) {
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          scale * inner(patterns.mask(i), patterns.mask(j));
    }
  });
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) e(i, j) = e(j, i);
  }
  return GramMatrix(std::move(e));
}

std::size_t independence_rank(const GramMatrix& g, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ParameterError("independence_rank: rel_tol must lie in (0, 1)");
  const Eigen::VectorXd values = g.eigenvalues();
  const double largest = values.maxCoeff();
  if (!(largest > 0.0)) return 0;
  return static_cast<std::size_t>((values.array() > rel_tol * largest).count());
}

std::vector<Field> BasisBundle::S_all() const {
  std::vector<Field> out;
  out.reserve(U.size());
  for (std::size_t m = 0; m < U.size(); ++m) out.push_back(S(m));
  return out;
}

BasisBundle orthonormalize_polar(const PatternSet& patterns, double rel_tol) {
  return polar_bundle(patterns, rel_tol, false);
}

BasisBundle biorthogonal(const PatternSet& patterns, double rel_tol) { return polar_bundle(patterns, rel_tol, true); }

Condition1Result check_condition1(const BasisBundle& bundle, double tol) {
  if (!bundle.has_biorthogonal()) throw ParameterError("check_condition1: bundle lacks biorthogonal vectors");
  Condition1Result result;
  result.alpha.reserve(bundle.size());
  for (const auto& u : bundle.U) result.alpha.push_back(spatial_mean(u));
  const Field fit = linear_combination(result.alpha, bundle.W);
  result.residual = norm(Field::constant(bundle.grid, 1.0) - fit);
  result.holds = result.residual <= tol;
  return result;
}

Condition1Result check_condition1(const PatternSet& patterns, double tol) {
  return check_condition1(biorthogonal(patterns), tol);
}

std::vector<LatticeShift> unit_shifts() { return {{1, 0}, {0, 1}}; }

Condition2Result check_condition2(const BasisBundle& bundle, std::span<const LatticeShift> shifts, double tol,
                                  ShiftBoundary boundary) {
  if (shifts.empty()) throw ParameterError("check_condition2: empty shift list");
  const Grid& grid = bundle.grid;
  const std::size_t N = grid.cell_count();
  const Matrix v_cols = to_rows(bundle.V).transpose();  // N x M

  Condition2Result result;
  Eigen::VectorXd f = v_cols.rowwise().squaredNorm();
  result.f_min = f.minCoeff();
  result.f_max = f.maxCoeff();
  result.f_mean = f.mean();
  // |G(r, r')| <= sqrt(f(r) f(r')), attained on the diagonal.
  const double g_max = result.f_max;

  const auto nx = static_cast<long>(grid.nx());
  const auto ny = static_cast<long>(grid.ny());
  auto shifted = [&](std::size_t cell, const LatticeShift& h) -> std::optional<std::size_t> {
    long ix = static_cast<long>(grid.ix_of(cell)) + h.dx;
    long iy = static_cast<long>(grid.iy_of(cell)) + h.dy;
    if (boundary == ShiftBoundary::periodic) {
      ix = ((ix % nx) + nx) % nx;
      iy = ((iy % ny) + ny) % ny;
    } else if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) {
      return std::nullopt;
    }
    return grid.index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
  };

  // Reference points: every cell on small grids, an even stride otherwise.
  constexpr std::size_t kMaxReference = 1024;
  const std::size_t stride = std::max<std::size_t>(1, (N + kMaxReference - 1) / kMaxReference);
  std::vector<std::size_t> refs;
  for (std::size_t i = 0; i < N; i += stride) refs.push_back(i);

  std::vector<double> dev(refs.size(), 0.0);
  std::vector<std::size_t> pairs(refs.size(), 0);
  parallel_for(refs.size(), [&](std::size_t k) {
    const std::size_t i = refs[k];
    const Eigen::RowVectorXd row = v_cols.row(static_cast<Eigen::Index>(i)) * v_cols.transpose();
    for (const auto& h : shifts) {
      const auto ih = shifted(i, h);
      if (!ih) continue;
      const Eigen::RowVectorXd row_h = v_cols.row(static_cast<Eigen::Index>(*ih)) * v_cols.transpose();
      for (std::size_t j = 0; j < N; ++j) {
        const auto jh = shifted(j, h);
        if (!jh) continue;
        dev[k] = std::max(dev[k], std::abs(row_h(static_cast<Eigen::Index>(*jh)) - row(static_cast<Eigen::Index>(j))));
        ++pairs[k];
      }
    }
  });
  const double max_abs = *std::max_element(dev.begin(), dev.end());
  for (auto p : pairs) result.pairs_checked += p;
  result.max_dev = g_max > 0.0 ? max_abs / g_max : 0.0;
  result.holds = result.pairs_checked > 0 && result.max_dev <= tol;
  return result;
}

}  // namespace sibucket
