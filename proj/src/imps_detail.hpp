#pragma once

// Matrix views of site tensors shared by the imps, canonical and tebd units.

#include <vector>

#include "kzmps/imps.hpp"

namespace kzmps::detail {

/// Site tensor (l, d, r) as the l x (d r) matrix [B_0 B_1 ... B_{d-1}].
inline Eigen::Map<const RowMatrixC> wide(const Tensor& b) {
  return {b.data().data(), static_cast<Eigen::Index>(b.dim(0)),
          static_cast<Eigen::Index>(b.dim(1) * b.dim(2))};
}

/// Site tensor (l, d, r) as the (l d) x r matrix with rows (a, s).
inline Eigen::Map<const RowMatrixC> tall(const Tensor& b) {
  return {b.data().data(), static_cast<Eigen::Index>(b.dim(0) * b.dim(1)),
          static_cast<Eigen::Index>(b.dim(2))};
}

inline std::vector<MatrixC> slices(const Tensor& b) {
  const auto w = wide(b);
  const auto r = static_cast<Eigen::Index>(b.dim(2));
  std::vector<MatrixC> out;
  for (std::size_t s = 0; s < b.dim(1); ++s) out.emplace_back(w.middleCols(static_cast<Eigen::Index>(s) * r, r));
  return out;
}

/// X -> sum_s K_s X Bra_s^dag for one site.
inline MatrixC apply_right(const std::vector<MatrixC>& ket, const std::vector<MatrixC>& bra, const MatrixC& x) {
  MatrixC y = MatrixC::Zero(ket.front().rows(), bra.front().rows());
  for (std::size_t s = 0; s < ket.size(); ++s) y.noalias() += ket[s] * (x * bra[s].adjoint());
  return y;
}

/// X -> sum_s Bra_s^dag X K_s for one site.
inline MatrixC apply_left(const std::vector<MatrixC>& ket, const std::vector<MatrixC>& bra, const MatrixC& x) {
  MatrixC y = MatrixC::Zero(bra.front().cols(), ket.front().cols());
  for (std::size_t s = 0; s < ket.size(); ++s) y.noalias() += bra[s].adjoint() * (x * ket[s]);
  return y;
}

/// theta = diag(lambda_left) (B1 B2) as a row-major (l) x (d d r) matrix.
inline RowMatrixC two_site(const std::vector<double>& lambda_left, const Tensor& b1, const Tensor& b2) {
  RowMatrixC p = tall(b1) * wide(b2);  // (l d) x (d r)
  const auto l = static_cast<Eigen::Index>(b1.dim(0));
  RowMatrixC theta = Eigen::Map<RowMatrixC>(p.data(), l, p.size() / l);
  if (!lambda_left.empty()) {
    for (Eigen::Index a = 0; a < l; ++a) theta.row(a) *= lambda_left[a];
  }
  return theta;
}

}  // namespace kzmps::detail
