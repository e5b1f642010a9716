#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "imps_detail.hpp"
#include "kzmps/imps.hpp"

namespace kzmps {

namespace {

// Leading fixed point of a CP map restricted to Hermitian block-diagonal
// matrices. Returns the eigenvalue and the positive fixed point.
std::pair<double, MatrixC> fixed_point(const std::function<MatrixC(const MatrixC&)>& apply, Eigen::Index n,
                                       const std::vector<int>& labels) {
  auto project = [&](MatrixC& x) {
    if (labels.empty()) return;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (labels[i] != labels[j]) x(i, j) = 0.0;
  };
  const LinearMap map = [&](const VectorC& x, VectorC& y) {
    MatrixC m = apply(Eigen::Map<const MatrixC>(x.data(), n, n));
    project(m);
    y = Eigen::Map<const VectorC>(m.data(), m.size());
  };
  MatrixC id = MatrixC::Identity(n, n);
  VectorC start = Eigen::Map<const VectorC>(id.data(), id.size());
  const auto res = leading_eigenpairs(map, static_cast<std::size_t>(n * n), 1, 1e-13, 4000, &start);
  MatrixC x = Eigen::Map<const MatrixC>(res.vectors.front().data(), n, n);
  const cplx tr = x.trace();
  if (std::abs(tr) == 0.0) throw ConvergenceError("canonicalize: fixed point has zero trace");
  x /= tr / std::abs(tr);
  x = 0.5 * (x + x.adjoint()).eval();
  project(x);
  return {std::abs(res.values.front()), x};
}

using Blocks = std::map<int, std::vector<Eigen::Index>>;

Blocks blocks_of(Eigen::Index n, const std::vector<int>& labels) {
  Blocks blocks;
  for (Eigen::Index i = 0; i < n; ++i) blocks[labels.empty() ? 0 : labels[i]].push_back(i);
  return blocks;
}

// Square n x n factor X with R = X X^dag, block diagonal; negative
// eigenvalues from round-off are clipped to zero.
MatrixC sqrt_factor(const MatrixC& r, const std::vector<int>& labels) {
  const Eigen::Index n = r.rows();
  MatrixC x = MatrixC::Zero(n, n);
  for (const auto& [label, idx] : blocks_of(n, labels)) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    MatrixC sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = r(idx[i], idx[j]);
    Eigen::SelfAdjointEigenSolver<MatrixC> es(sub);
    const MatrixC f = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                      es.eigenvectors().adjoint();
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) x(idx[i], idx[j]) = f(i, j);
  }
  if (x.norm() == 0.0) throw ConvergenceError("canonicalize: fixed point vanished");
  return x / x.norm();
}

struct Gauge {
  MatrixC x;               // C_s X = c X Q_s
  std::vector<MatrixC> q;  // sum_s Q_s Q_s^dag = 1
};

constexpr int kRefineMaxIter = 20000;
constexpr double kRefineTol = 1e-14;

// Thin QR of a tall matrix with a non-negative real diagonal in R.
std::pair<MatrixC, MatrixC> positive_qr(const MatrixC& m) {
  const Eigen::Index k = m.cols();
  Eigen::HouseholderQR<MatrixC> qr(m);
  MatrixC q = qr.householderQ() * MatrixC::Identity(m.rows(), k);
  MatrixC r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < k; ++i) {
    const cplx dii = r(i, i);
    if (std::abs(dii) == 0.0) continue;
    const cplx ph = dii / std::abs(dii);
    r.row(i) /= ph;
    q.col(i) *= ph;
  }
  return {q, r};
}

// One sweep of Y -> R where [Y C_s]_s (stacked) = Q R blockwise. The column
// space of each label block of Y is closed under the map.
std::pair<MatrixC, std::vector<MatrixC>> left_sweep(const std::vector<MatrixC>& cell, const MatrixC& y,
                                                     const Blocks& blocks) {
  const Eigen::Index n = y.rows();
  const auto ns = static_cast<Eigen::Index>(cell.size());
  MatrixC stacked(ns * n, n);
  for (Eigen::Index s = 0; s < ns; ++s) stacked.middleRows(s * n, n) = y * cell[static_cast<std::size_t>(s)];
  MatrixC r = MatrixC::Zero(n, n);
  MatrixC q = MatrixC::Zero(ns * n, n);
  for (const auto& [label, idx] : blocks) {
    // Columns of this block; rows are whatever is non-zero there.
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < ns * n; ++i) {
      for (auto j : idx)
        if (stacked(i, j) != cplx(0.0)) {
          rows.push_back(i);
          break;
        }
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (rows.empty()) continue;
    MatrixC sub(static_cast<Eigen::Index>(rows.size()), k);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (Eigen::Index j = 0; j < k; ++j) sub(static_cast<Eigen::Index>(i), j) = stacked(rows[i], idx[j]);
    if (sub.rows() < k) sub.conservativeResizeLike(MatrixC::Zero(k, k));
    auto [qb, rb] = positive_qr(sub);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) r(idx[i], idx[j]) = rb(i, j);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (Eigen::Index j = 0; j < k; ++j) q(rows[i], idx[j]) = qb(static_cast<Eigen::Index>(i), j);
  }
  std::vector<MatrixC> slices;
  for (Eigen::Index s = 0; s < ns; ++s) slices.emplace_back(q.middleRows(s * n, n));
  return {r, slices};
}

// Fixed point of Y -> R with Y C_s = c A_s R. Returns R normalized to unit
// Frobenius norm and the left-isometric slices A_s.
std::pair<MatrixC, std::vector<MatrixC>> refine(const std::vector<MatrixC>& cell, MatrixC y,
                                                 const std::vector<int>& labels) {
  const auto blocks = blocks_of(y.rows(), labels);
  std::pair<MatrixC, std::vector<MatrixC>> out;
  double err = 1.0;
  for (int it = 0; it < kRefineMaxIter; ++it) {
    out = left_sweep(cell, y, blocks);
    const double nrm = out.first.norm();
    if (nrm == 0.0) throw ConvergenceError("canonicalize: gauge factor vanished");
    out.first /= nrm;
    err = (out.first - y).norm();
    y = out.first;
    if (err < kRefineTol * std::sqrt(static_cast<double>(y.rows()))) return out;
  }
  if (err > 1e-9) throw ConvergenceError("canonicalize: gauge refinement did not converge");
  return out;
}

std::vector<MatrixC> adjoints(const std::vector<MatrixC>& v) {
  std::vector<MatrixC> out;
  for (const auto& m : v) out.emplace_back(m.adjoint());
  return out;
}

// Left gauge: Y with L = Y^dag Y and Y C_s = c A_s Y.
MatrixC refine_left(const std::vector<MatrixC>& cell, const MatrixC& y0, const std::vector<int>& labels) {
  return refine(cell, y0, labels).first;
}

// Right gauge: X with R = X X^dag and C_s X = c X Q_s; the left problem for
// the adjoint cell.
Gauge refine_right(const std::vector<MatrixC>& cell, const MatrixC& x0, const std::vector<int>& labels) {
  auto [r, a] = refine(adjoints(cell), x0.adjoint(), labels);
  return {r.adjoint(), adjoints(a)};
}

Tensor tensor_from_rows(const MatrixC& m, std::vector<std::size_t> shape) {
  // m is (shape[0]) x (shape[1] * shape[2]) with column index (s, r).
  Tensor t(std::move(shape));
  auto data = t.data();
  const Eigen::Index cols = m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) data[static_cast<std::size_t>(i * cols + j)] = m(i, j);
  return t;
}

UniformMPS canonical_pass(const Tensor& site_a, const Tensor& site_b, int physical_dim, int charge_modulus,
                          std::vector<int> physical_charges, std::vector<int> labels_ba,
                          std::vector<int> labels_ab, double cutoff) {
  if (site_a.rank() != 3 || site_b.rank() != 3) throw InvalidArgument("canonicalize: site tensors must have rank 3");
  const auto d = static_cast<std::size_t>(physical_dim);
  if (site_a.dim(1) != d || site_b.dim(1) != d) throw InvalidArgument("canonicalize: physical dimension mismatch");
  if (site_a.dim(2) != site_b.dim(0) || site_b.dim(2) != site_a.dim(0)) {
    throw InvalidArgument("canonicalize: bond dimensions do not close the unit cell");
  }
  const bool charged = charge_modulus > 1;
  if (charged && (labels_ba.size() != site_a.dim(0) || labels_ab.size() != site_a.dim(2) ||
                  physical_charges.size() != d)) {
    throw InvalidArgument("canonicalize: charge labels do not match tensor shapes");
  }
  const int q = charge_modulus;
  const auto l = static_cast<Eigen::Index>(site_a.dim(0));

  // Cell slices C_{s1 s2} = A_{s1} B_{s2}.
  const auto a = detail::slices(site_a);
  const auto b = detail::slices(site_b);
  std::vector<MatrixC> cell;
  for (std::size_t s1 = 0; s1 < d; ++s1)
    for (std::size_t s2 = 0; s2 < d; ++s2) cell.push_back(a[s1] * b[s2]);

  const std::vector<int> no_labels;
  const auto& lab = charged ? labels_ba : no_labels;
  auto [eta, r] = fixed_point(
      [&](const MatrixC& x) {
        MatrixC y = MatrixC::Zero(l, l);
        for (const auto& c : cell) y.noalias() += c * x * c.adjoint();
        return y;
      },
      l, lab);
  auto [eta_l, lm] = fixed_point(
      [&](const MatrixC& x) {
        MatrixC y = MatrixC::Zero(l, l);
        for (const auto& c : cell) y.noalias() += c.adjoint() * x * c;
        return y;
      },
      l, lab);
  (void)eta_l;
  if (!(eta > 0.0)) throw ConvergenceError("canonicalize: transfer map has zero spectral radius");

  // Refine the square-root factors by QR iteration: C_s X = X Q_s with Q
  // right isometric and Y C_s = A_s Y with A left isometric. Working with the
  // factors keeps small Schmidt values at machine precision.
  const Gauge right_gauge = refine_right(cell, sqrt_factor(r, lab), lab);
  const MatrixC y = refine_left(cell, sqrt_factor(lm, lab).adjoint(), lab);
  const MatrixC& x = right_gauge.x;

  const MatrixC yx = y * x;
  const auto gauge = truncated_block_svd(
      yx, charged ? std::span<const int>(lab) : std::span<const int>(),
      charged ? std::span<const int>(lab) : std::span<const int>(),
      TruncationParams{static_cast<std::size_t>(yx.rows()), cutoff, 0.0});
  const MatrixC v = gauge.vh.adjoint();
  const auto k = v.cols();
  const auto lambda = gauge.s;  // bond B|A

  // New cell B_s = V^dag Q_s V, right canonical with left weights Lambda^2.
  RowMatrixC theta(k * static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d) * k);
  RowMatrixC bmat(theta.rows(), theta.cols());
  for (std::size_t s1 = 0; s1 < d; ++s1) {
    for (std::size_t s2 = 0; s2 < d; ++s2) {
      const MatrixC blk = gauge.vh * right_gauge.q[s1 * d + s2] * v;
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
          bmat(i * static_cast<Eigen::Index>(d) + static_cast<Eigen::Index>(s1),
               static_cast<Eigen::Index>(s2) * k + j) = blk(i, j);
        }
    }
  }
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    theta.row(i) = bmat.row(i) * lambda.values[static_cast<std::size_t>(i / static_cast<Eigen::Index>(d))];
  }

  std::vector<int> row_q, col_q;
  if (charged) {
    for (Eigen::Index i = 0; i < k; ++i)
      for (std::size_t s = 0; s < d; ++s) row_q.push_back(mod_charge(lambda.sectors[i] + physical_charges[s], q));
    for (std::size_t s = 0; s < d; ++s)
      for (Eigen::Index j = 0; j < k; ++j) col_q.push_back(mod_charge(lambda.sectors[j] - physical_charges[s], q));
  }
  const auto split = truncated_block_svd(MatrixC(theta), row_q, col_q,
                                         TruncationParams{static_cast<std::size_t>(theta.rows()), cutoff, 0.0});
  const auto m = split.vh.rows();

  UniformMPS out;
  out.physical_dim = physical_dim;
  out.charge_modulus = q;
  if (charged) out.physical_charges = std::move(physical_charges);
  out.lambda_b = lambda;
  out.lambda_b.discarded_weight = 0.0;
  out.lambda_a = split.s;
  out.lambda_a.discarded_weight = 0.0;
  out.b_b = tensor_from_rows(split.vh, {static_cast<std::size_t>(m), d, static_cast<std::size_t>(k)});
  const MatrixC ba = MatrixC(bmat) * split.vh.adjoint() / split.norm;
  // ba rows are (a, s1): reshape to (k, d, m).
  Tensor ta({static_cast<std::size_t>(k), d, static_cast<std::size_t>(m)});
  auto data = ta.data();
  for (Eigen::Index i = 0; i < ba.rows(); ++i)
    for (Eigen::Index j = 0; j < m; ++j) data[static_cast<std::size_t>(i * m + j)] = ba(i, j);
  out.b_a = std::move(ta);
  attach_charges(out);
  return out;
}

}  // namespace

UniformMPS canonicalize(const Tensor& site_a, const Tensor& site_b, int physical_dim, int charge_modulus,
                        std::vector<int> physical_charges, std::vector<int> labels_ba,
                        std::vector<int> labels_ab, double cutoff) {
  // Dropping Schmidt values spoils the isometry slightly; repeat the pass
  // until no bond shrinks.
  UniformMPS out = canonical_pass(site_a, site_b, physical_dim, charge_modulus, physical_charges,
                                  std::move(labels_ba), std::move(labels_ab), cutoff);
  std::size_t dims = site_a.dim(0) + site_a.dim(2);
  for (int pass = 0; pass < 4 && out.lambda_a.size() + out.lambda_b.size() < dims; ++pass) {
    dims = out.lambda_a.size() + out.lambda_b.size();
    out = canonical_pass(out.b_a, out.b_b, physical_dim, charge_modulus, physical_charges, out.lambda_b.sectors,
                         out.lambda_a.sectors, cutoff);
  }
  return out;
}

UniformMPS canonicalize(const UniformMPS& mps, double cutoff) {
  return canonicalize(mps.b_a, mps.b_b, mps.physical_dim, mps.charge_modulus, mps.physical_charges,
                      mps.lambda_b.sectors, mps.lambda_a.sectors, cutoff);
}

}  // namespace kzmps
