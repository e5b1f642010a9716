#pragma once

#include <functional>
#include <vector>

#include "kzmps/tensor.hpp"

namespace kzmps {

/// Schmidt values of one bond, sorted by (value desc, sector asc).
struct SchmidtSpectrum {
  std::vector<double> values;
  std::vector<int> sectors;  // empty when the bond carries no charges
  double discarded_weight = 0.0;

  std::size_t size() const { return values.size(); }
  double norm_squared() const;
  bool operator==(const SchmidtSpectrum&) const = default;
};

/// Dense truncated SVD of a matrix with optional block structure.
///
/// When charges are given, entry (r, c) may be nonzero only if
/// row_charges[r] == col_charges[c]; each such block is decomposed on its
/// own and the kept columns of `u` / rows of `vh` are exactly zero outside
/// their sector.
struct BlockSvd {
  MatrixC u;   // rows x k
  SchmidtSpectrum s;
  MatrixC vh;  // k x cols
  double norm = 0.0;  // 2-norm of the kept values before renormalization
  bool multiplet_split = false;
};

struct TruncationParams {
  std::size_t chi_max = 0;
  double cutoff = 0.0;  // relative to the largest singular value
  double multiplet_tol = 1e-10;
};

/// Keep at most chi_max singular values, drop those below cutoff * largest,
/// never split a group of values equal within multiplet_tol (relative).
/// The kept values are renormalized to unit 2-norm.
BlockSvd truncated_block_svd(const MatrixC& m, std::span<const int> row_charges,
                             std::span<const int> col_charges, const TruncationParams& params);

struct TensorSvd {
  Tensor u;  // row legs + new leg
  SchmidtSpectrum s;
  Tensor v;  // new leg + column legs
  bool multiplet_split = false;
};

/// Truncated SVD of `theta` seen as a matrix with the first `split` legs as
/// rows. Charged tensors are decomposed block-wise per charge sector.
TensorSvd svd_truncate(const Tensor& theta, std::size_t split, std::size_t chi_max, double cutoff);

/// y = A x for a linear map on C^dim.
using LinearMap = std::function<void(const VectorC& x, VectorC& y)>;

struct EigenResult {
  std::vector<cplx> values;     // sorted by magnitude, descending
  std::vector<VectorC> vectors;  // unit 2-norm
  bool degenerate_top = false;   // |value_0| - |value_1| < 1e-10 * |value_0|
  int iterations = 0;
};

/// Largest-magnitude eigenpairs of a linear map. Small problems
/// (dim <= dense_limit) are materialized and solved densely; larger ones use
/// a thick-restart Krylov (Arnoldi) iteration from a fixed start vector. If
/// the residual stalls above tol but below 1e-10 relative, the best Ritz
/// pairs are returned; otherwise ConvergenceError after max_iter restarts.
EigenResult leading_eigenpairs(const LinearMap& map, std::size_t dim, std::size_t count,
                               double tol = 1e-12, int max_iter = 500,
                               const VectorC* start = nullptr, std::size_t dense_limit = 256);

struct DominantEigen {
  cplx value;
  VectorC vector;
  bool degenerate = false;
};

DominantEigen dominant_eigenvalue(const LinearMap& map, std::size_t dim, double tol = 1e-12,
                                  int max_iter = 500);

/// exp(scale * h) for Hermitian h (a square matrix, or an even-rank tensor
/// seen as a matrix over its first half of legs). Charged tensors are
/// exponentiated block by block, so the result has the same block pattern.
Tensor hermitian_exponential(const Tensor& h, cplx scale);
MatrixC hermitian_exponential(const MatrixC& h, cplx scale);

/// Same as above restricted to the blocks row_charge == col_charge.
MatrixC hermitian_exponential_blocked(const MatrixC& h, std::span<const int> charges, cplx scale);

bool is_hermitian(const MatrixC& h, double tol = 1e-12);

}  // namespace kzmps
