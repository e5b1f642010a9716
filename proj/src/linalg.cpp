#include "kzmps/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <lapacke.h>

namespace kzmps {

double SchmidtSpectrum::norm_squared() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

namespace {

struct Candidate {
  double value;
  int sector;
  std::size_t block;
  Eigen::Index column;
};

struct SectorBlock {
  int sector;
  std::vector<Eigen::Index> rows, cols;
  MatrixC u, vh;
  Eigen::VectorXd s;
};

// Thin SVD by LAPACK divide and conquer; false if it did not converge.
bool dense_svd(const MatrixC& a, bool real, SectorBlock& b) {
  const auto m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  b.s.resize(k);
  if (real) {
    Eigen::MatrixXd w = a.real(), u(m, k), vt(k, n);
    if (LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, w.data(), m, b.s.data(), u.data(), m, vt.data(), k) != 0) {
      return false;
    }
    b.u = u.cast<cplx>();
    b.vh = vt.cast<cplx>();
    return true;
  }
  MatrixC w = a, u(m, k), vt(k, n);
  auto ptr = [](MatrixC& x) { return reinterpret_cast<lapack_complex_double*>(x.data()); };
  if (LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', m, n, ptr(w), m, b.s.data(), ptr(u), m, ptr(vt), k) != 0) return false;
  b.u = std::move(u);
  b.vh = std::move(vt);
  return true;
}

std::vector<SectorBlock> decompose_blocks(const MatrixC& m, std::span<const int> row_charges,
                                          std::span<const int> col_charges) {
  std::vector<SectorBlock> blocks;
  if (row_charges.empty()) {
    SectorBlock b{0, {}, {}, {}, {}, {}};
    b.rows.resize(m.rows());
    b.cols.resize(m.cols());
    std::iota(b.rows.begin(), b.rows.end(), 0);
    std::iota(b.cols.begin(), b.cols.end(), 0);
    blocks.push_back(std::move(b));
  } else {
    std::map<int, std::size_t> index;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      auto [it, fresh] = index.try_emplace(row_charges[r], blocks.size());
      if (fresh) blocks.push_back(SectorBlock{row_charges[r], {}, {}, {}, {}, {}});
      blocks[it->second].rows.push_back(r);
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      auto it = index.find(col_charges[c]);
      if (it != index.end()) blocks[it->second].cols.push_back(c);
    }
    std::erase_if(blocks, [](const SectorBlock& b) { return b.rows.empty() || b.cols.empty(); });
    std::sort(blocks.begin(), blocks.end(),
              [](const SectorBlock& a, const SectorBlock& b) { return a.sector < b.sector; });
  }

  // Real input (imaginary-time evolution of a real state) takes the cheaper
  // real decomposition.
  const bool real = m.imag().isZero(0.0);
  for (auto& b : blocks) {
    MatrixC sub(b.rows.size(), b.cols.size());
    for (std::size_t i = 0; i < b.rows.size(); ++i)
      for (std::size_t j = 0; j < b.cols.size(); ++j) sub(i, j) = m(b.rows[i], b.cols[j]);
    if (!dense_svd(sub, real, b)) {
      Eigen::BDCSVD<MatrixC> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
      b.u = svd.matrixU();
      b.vh = svd.matrixV().adjoint();
      b.s = svd.singularValues();
    }
  }
  return blocks;
}

}  // namespace

BlockSvd truncated_block_svd(const MatrixC& m, std::span<const int> row_charges,
                             std::span<const int> col_charges, const TruncationParams& params) {
  if (params.chi_max < 1) throw InvalidArgument("svd_truncate: chi_max must be at least 1");
  if (params.cutoff < 0.0) throw InvalidArgument("svd_truncate: cutoff must be non-negative");
  const bool charged = !row_charges.empty();
  if (charged && (row_charges.size() != static_cast<std::size_t>(m.rows()) ||
                  col_charges.size() != static_cast<std::size_t>(m.cols()))) {
    throw InvalidArgument("svd_truncate: charge lists do not match matrix shape");
  }

  auto blocks = decompose_blocks(m, row_charges, col_charges);
  std::vector<Candidate> cand;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (Eigen::Index j = 0; j < blocks[b].s.size(); ++j)
      cand.push_back({blocks[b].s(j), blocks[b].sector, b, j});
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.sector < b.sector;
  });

  const double largest = cand.empty() ? 0.0 : cand.front().value;
  if (!(largest > 0.0) || !std::isfinite(largest)) {
    throw InvalidArgument("svd_truncate: all singular values below cutoff");
  }
  std::size_t above = 0;
  while (above < cand.size() && cand[above].value >= params.cutoff * largest) ++above;
  if (above == 0) throw InvalidArgument("svd_truncate: all singular values below cutoff");

  BlockSvd out;
  std::size_t keep = std::min(above, params.chi_max);
  if (keep < above) {
    const double edge = cand[keep].value;
    auto same = [&](double x) { return std::abs(x - edge) <= params.multiplet_tol * x; };
    if (same(cand[keep - 1].value)) {
      std::size_t start = keep - 1;
      while (start > 0 && same(cand[start - 1].value)) --start;
      if (start > 0) {
        keep = start;
      } else {
        out.multiplet_split = true;
      }
    }
  }

  double kept2 = 0.0, dropped2 = 0.0;
  for (std::size_t i = 0; i < cand.size(); ++i) (i < keep ? kept2 : dropped2) += cand[i].value * cand[i].value;
  out.norm = std::sqrt(kept2);
  out.s.discarded_weight = dropped2;
  out.u = MatrixC::Zero(m.rows(), static_cast<Eigen::Index>(keep));
  out.vh = MatrixC::Zero(static_cast<Eigen::Index>(keep), m.cols());
  for (std::size_t k = 0; k < keep; ++k) {
    const auto& c = cand[k];
    const auto& b = blocks[c.block];
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t i = 0; i < b.rows.size(); ++i) out.u(b.rows[i], kk) = b.u(i, c.column);
    for (std::size_t j = 0; j < b.cols.size(); ++j) out.vh(kk, b.cols[j]) = b.vh(c.column, j);
    out.s.values.push_back(c.value / out.norm);
    if (charged) out.s.sectors.push_back(c.sector);
  }
  return out;
}

TensorSvd svd_truncate(const Tensor& theta, std::size_t split, std::size_t chi_max, double cutoff) {
  if (split == 0 || split >= theta.rank()) throw InvalidArgument("svd_truncate: split must separate legs");
  const MatrixC m = theta.to_matrix(split);
  std::vector<std::size_t> row_shape(theta.shape().begin(), theta.shape().begin() + split);
  std::vector<std::size_t> col_shape(theta.shape().begin() + split, theta.shape().end());

  std::vector<int> rc, cc;
  int q = 1;
  if (theta.has_charges()) {
    const auto& ch = *theta.charges();
    q = ch.modulus;
    // Row charge = sum of row-leg labels; column sector = minus the column-leg sum.
    auto combined = [&](std::size_t first, std::size_t last, int sign) {
      std::vector<int> out{0};
      for (std::size_t leg = first; leg < last; ++leg) {
        std::vector<int> next;
        next.reserve(out.size() * ch.labels[leg].size());
        for (int a : out)
          for (int b : ch.labels[leg]) next.push_back(mod_charge(a + sign * b, q));
        out = std::move(next);
      }
      return out;
    };
    rc = combined(0, split, 1);
    cc = combined(split, theta.rank(), -1);
  }

  BlockSvd svd = truncated_block_svd(m, rc, cc, {chi_max, cutoff, 1e-10});
  const std::size_t k = svd.s.size();
  TensorSvd out;
  row_shape.push_back(k);
  col_shape.insert(col_shape.begin(), k);
  out.u = Tensor::from_matrix(svd.u, row_shape);
  out.v = Tensor::from_matrix(svd.vh, col_shape);
  out.s = svd.s;
  out.multiplet_split = svd.multiplet_split;
  if (theta.has_charges()) {
    const auto& ch = *theta.charges();
    LegCharges cu{q, {ch.labels.begin(), ch.labels.begin() + split}};
    LegCharges cv{q, {}};
    std::vector<int> new_leg_u, new_leg_v;
    for (int s : svd.s.sectors) {
      new_leg_u.push_back(mod_charge(-s, q));
      new_leg_v.push_back(s);
    }
    cu.labels.push_back(new_leg_u);
    cv.labels.push_back(new_leg_v);
    cv.labels.insert(cv.labels.end(), ch.labels.begin() + split, ch.labels.end());
    out.u.set_charges(std::move(cu));
    out.v.set_charges(std::move(cv));
  }
  return out;
}

namespace {

// A residual that stops halving for this many restarts has hit rounding; it
// is accepted if it is below the floor (relative to the leading eigenvalue).
constexpr int kStagnationRestarts = 100;
constexpr double kStagnationFloor = 1e-10;

VectorC default_start(std::size_t dim) {
  // Fixed pseudo-random vector: reproducible and generically not orthogonal
  // to the dominant eigenvector.
  VectorC v(static_cast<Eigen::Index>(dim));
  std::uint64_t state = 0x9E3779B97F4A7C15ULL;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    const double a = static_cast<double>(state >> 11) / 9007199254740992.0;
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    const double b = static_cast<double>(state >> 11) / 9007199254740992.0;
    v(i) = cplx(1.0 + a, 0.5 * b);
  }
  return v.normalized();
}

EigenResult sorted_result(const Eigen::VectorXcd& vals, const MatrixC& vecs, std::size_t count) {
  std::vector<Eigen::Index> order(vals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(vals(a)) > std::abs(vals(b));
  });
  EigenResult r;
  for (std::size_t i = 0; i < std::min<std::size_t>(count, order.size()); ++i) {
    r.values.push_back(vals(order[i]));
    r.vectors.push_back(vecs.col(order[i]).normalized());
  }
  if (order.size() >= 2) {
    const double a0 = std::abs(vals(order[0])), a1 = std::abs(vals(order[1]));
    r.degenerate_top = (a0 - a1) < 1e-10 * std::max(a0, 1e-300);
  }
  return r;
}

// Orthogonalize v against the first `cols` columns of W (two passes).
double orthogonalize(const MatrixC& W, Eigen::Index cols, VectorC& v) {
  for (int pass = 0; pass < 2 && cols > 0; ++pass) {
    VectorC h = W.leftCols(cols).adjoint() * v;
    v.noalias() -= W.leftCols(cols) * h;
  }
  return v.norm();
}

}  // namespace

EigenResult leading_eigenpairs(const LinearMap& map, std::size_t dim, std::size_t count, double tol,
                               int max_iter, const VectorC* start, std::size_t dense_limit) {
  if (dim < 1) throw InvalidArgument("leading_eigenpairs: dim must be positive");
  if (count < 1) throw InvalidArgument("leading_eigenpairs: count must be positive");
  const auto n = static_cast<Eigen::Index>(dim);

  if (dim <= dense_limit) {
    MatrixC a(n, n);
    VectorC e = VectorC::Zero(n), y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      e(j) = 1.0;
      map(e, y);
      a.col(j) = y;
      e(j) = 0.0;
    }
    if (!a.allFinite()) throw ConvergenceError("leading_eigenpairs: map produced non-finite values");
    Eigen::ComplexEigenSolver<MatrixC> es(a);
    if (es.info() == Eigen::Success) return sorted_result(es.eigenvalues(), es.eigenvectors(), count);
    // The Schur iteration can stall on highly structured matrices; LAPACK's
    // balanced solver is the fallback.
    Eigen::VectorXcd vals(n);
    MatrixC vecs(n, n);
    auto ptr = [](auto& x) { return reinterpret_cast<lapack_complex_double*>(x.data()); };
    if (LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(n), ptr(a), static_cast<lapack_int>(n),
                      ptr(vals), nullptr, 1, ptr(vecs), static_cast<lapack_int>(n)) != 0) {
      throw ConvergenceError("leading_eigenpairs: dense solve failed");
    }
    return sorted_result(vals, vecs, count);
  }

  const Eigen::Index m = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * count + 20, 40));
  const Eigen::Index keep = std::min<Eigen::Index>(m - 1, std::max<Eigen::Index>(count + 4, m / 2));
  MatrixC W(n, m), AW(n, m);
  VectorC next = start ? start->normalized() : default_start(dim);
  VectorC y(n);
  Eigen::Index j = 0;
  // Best Ritz set seen so far, accepted when the residual stalls above tol
  // but below the stagnation floor.
  EigenResult best;
  double best_residual = std::numeric_limits<double>::infinity();
  int best_iter = 0;

  for (int iter = 1; iter <= max_iter; ++iter) {
    while (j < m) {
      double nrm = orthogonalize(W, j, next);
      if (nrm < 1e-13) {
        if (j >= static_cast<Eigen::Index>(count)) break;  // invariant subspace
        next = default_start(dim) + VectorC::Constant(n, cplx(0.0, 1.0 * (j + 1) / n));
        nrm = orthogonalize(W, j, next);
        if (nrm < 1e-13) break;
      }
      W.col(j) = next / nrm;
      map(W.col(j), y);
      AW.col(j) = y;
      next = y;
      ++j;
    }

    const MatrixC G = W.leftCols(j).adjoint() * AW.leftCols(j);
    Eigen::ComplexEigenSolver<MatrixC> es(G);
    if (es.info() != Eigen::Success) throw ConvergenceError("leading_eigenpairs: Ritz solve failed");
    const auto vals = es.eigenvalues();
    std::vector<Eigen::Index> order(vals.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(vals(a)) > std::abs(vals(b));
    });

    const double scale = std::max(std::abs(vals(order[0])), 1e-300);
    bool converged = true;
    VectorC first_residual;
    double worst = 0.0;
    const std::size_t want = std::min<std::size_t>(count, order.size());
    for (std::size_t i = 0; i < want; ++i) {
      const VectorC yi = es.eigenvectors().col(order[i]).normalized();
      VectorC r = AW.leftCols(j) * yi - vals(order[i]) * (W.leftCols(j) * yi);
      worst = std::max(worst, r.norm() / scale);
      if (r.norm() > tol * scale) {
        converged = false;
        if (first_residual.size() == 0) first_residual = r;
      }
    }
    const bool improved = worst < 0.5 * best_residual;
    const bool stalled = iter - best_iter >= kStagnationRestarts && best_residual <= kStagnationFloor;
    if (stalled) return best;
    if (converged || j == n || improved) {
      MatrixC ritz(n, static_cast<Eigen::Index>(want));
      Eigen::VectorXcd rv(static_cast<Eigen::Index>(want));
      for (std::size_t i = 0; i < want; ++i) {
        rv(i) = vals(order[i]);
        ritz.col(i) = W.leftCols(j) * es.eigenvectors().col(order[i]);
      }
      EigenResult r = sorted_result(rv, ritz, count);
      if (order.size() >= 2) {
        const double a0 = std::abs(vals(order[0])), a1 = std::abs(vals(order[1]));
        r.degenerate_top = (a0 - a1) < 1e-10 * std::max(a0, 1e-300);
      }
      r.iterations = iter;
      if (converged || j == n) return r;
      best = std::move(r);
      best_residual = worst;
      best_iter = iter;
    }

    // Thick restart: keep the leading Ritz subspace, continue along the residual.
    const Eigen::Index k = std::min<Eigen::Index>(keep, j);
    MatrixC Y(j, k);
    for (Eigen::Index i = 0; i < k; ++i) Y.col(i) = es.eigenvectors().col(order[i]);
    Eigen::HouseholderQR<MatrixC> qr(Y);
    const MatrixC Q = qr.householderQ() * MatrixC::Identity(j, k);
    const MatrixC Wk = W.leftCols(j) * Q;
    const MatrixC AWk = AW.leftCols(j) * Q;
    W.leftCols(k) = Wk;
    AW.leftCols(k) = AWk;
    j = k;
    next = first_residual;
  }
  if (best_residual <= kStagnationFloor) return best;
  throw ConvergenceError("leading_eigenpairs: no convergence within max_iter");
}

DominantEigen dominant_eigenvalue(const LinearMap& map, std::size_t dim, double tol, int max_iter) {
  auto r = leading_eigenpairs(map, dim, 1, tol, max_iter);
  return {r.values.front(), r.vectors.front(), r.degenerate_top};
}

bool is_hermitian(const MatrixC& h, double tol) {
  if (h.rows() != h.cols()) return false;
  return (h - h.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, h.cwiseAbs().maxCoeff());
}

MatrixC hermitian_exponential(const MatrixC& h, cplx scale) {
  if (!is_hermitian(h)) throw InvalidArgument("hermitian_exponential: input is not Hermitian");
  if (h.size() == 0) return h;
  const MatrixC hs = 0.5 * (h + h.adjoint());
  if (hs.imag().isZero(0.0) && scale.imag() == 0.0) {
    // Real symmetric generator with a real scale: keep the result exactly real.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs.real());
    if (es.info() != Eigen::Success) throw ConvergenceError("hermitian_exponential: eigensolver failed");
    const Eigen::VectorXd d = (scale.real() * es.eigenvalues()).array().exp();
    return (es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose()).cast<cplx>();
  }
  Eigen::SelfAdjointEigenSolver<MatrixC> es(hs);
  if (es.info() != Eigen::Success) throw ConvergenceError("hermitian_exponential: eigensolver failed");
  VectorC d(hs.rows());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = std::exp(scale * es.eigenvalues()(i));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

MatrixC hermitian_exponential_blocked(const MatrixC& h, std::span<const int> charges, cplx scale) {
  if (!is_hermitian(h)) throw InvalidArgument("hermitian_exponential: input is not Hermitian");
  const Eigen::Index n = h.rows();
  if (charges.size() != static_cast<std::size_t>(n)) {
    throw InvalidArgument("hermitian_exponential: one charge per basis state required");
  }
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      if (charges[r] != charges[c] && std::abs(h(r, c)) > 1e-12) {
        throw InvalidArgument("hermitian_exponential: generator mixes charge sectors");
      }
  std::map<int, std::vector<Eigen::Index>> sectors;
  for (Eigen::Index r = 0; r < n; ++r) sectors[charges[r]].push_back(r);
  MatrixC out = MatrixC::Zero(n, n);
  for (const auto& [q, idx] : sectors) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    MatrixC sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = h(idx[i], idx[j]);
    const MatrixC e = hermitian_exponential(sub, scale);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) out(idx[i], idx[j]) = e(i, j);
  }
  return out;
}

Tensor hermitian_exponential(const Tensor& h, cplx scale) {
  if (h.rank() == 0 || h.rank() % 2 != 0) {
    throw InvalidArgument("hermitian_exponential: tensor must have an even number of legs");
  }
  const std::size_t half = h.rank() / 2;
  const MatrixC m = h.to_matrix(half);
  if (m.rows() != m.cols()) throw InvalidArgument("hermitian_exponential: operator is not square");

  Tensor out;
  if (h.has_charges() && h.charges()->modulus > 1) {
    if (h.covariance_violation() > 1e-12) {
      throw InvalidArgument("hermitian_exponential: generator is not charge covariant");
    }
    const auto& ch = *h.charges();
    std::vector<int> rc{0};
    for (std::size_t leg = 0; leg < half; ++leg) {
      std::vector<int> next;
      for (int a : rc)
        for (int b : ch.labels[leg]) next.push_back(mod_charge(a + b, ch.modulus));
      rc = std::move(next);
    }
    out = Tensor::from_matrix(hermitian_exponential_blocked(m, rc, scale), h.shape());
    out.set_charges(ch);
  } else {
    out = Tensor::from_matrix(hermitian_exponential(m, scale), h.shape());
    if (h.has_charges()) out.set_charges(*h.charges());
  }
  return out;
}

}  // namespace kzmps
