#include "kzmps/imps.hpp"

#include <cmath>
#include <limits>

#include "imps_detail.hpp"

namespace kzmps {

namespace {

Tensor divide_right(const Tensor& b, const SchmidtSpectrum& lambda) {
  Tensor g = b;
  const std::size_t r = b.dim(2);
  auto data = g.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] /= lambda.values[i % r];
  return g;
}

std::vector<double> squared(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * v[i];
  return out;
}

void check_pair(const UniformMPS& a, const UniformMPS& b) {
  if (a.physical_dim != b.physical_dim) throw InvalidArgument("transfer map: physical dimensions differ");
}

}  // namespace

Tensor UniformMPS::gamma_a() const { return divide_right(b_a, lambda_a); }
Tensor UniformMPS::gamma_b() const { return divide_right(b_b, lambda_b); }

void attach_charges(UniformMPS& mps) {
  if (mps.charge_modulus <= 1) {
    mps.b_a.clear_charges();
    mps.b_b.clear_charges();
    return;
  }
  const int q = mps.charge_modulus;
  auto negated = [q](const std::vector<int>& v) {
    std::vector<int> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = mod_charge(-v[i], q);
    return out;
  };
  mps.b_a.set_charges({q, {mps.lambda_b.sectors, mps.physical_charges, negated(mps.lambda_a.sectors)}});
  mps.b_b.set_charges({q, {mps.lambda_a.sectors, mps.physical_charges, negated(mps.lambda_b.sectors)}});
}

UniformMPS product_state(int physical_dim, std::span<const cplx> local_vector, int charge_modulus,
                         std::vector<int> physical_charges) {
  if (physical_dim < 1 || local_vector.size() != static_cast<std::size_t>(physical_dim)) {
    throw InvalidArgument("product_state: local vector length must equal the physical dimension");
  }
  double nrm = 0.0;
  for (auto c : local_vector) nrm += std::norm(c);
  nrm = std::sqrt(nrm);
  if (nrm == 0.0) throw InvalidArgument("product_state: zero local vector");

  UniformMPS mps;
  mps.physical_dim = physical_dim;
  mps.charge_modulus = charge_modulus;
  int charge = 0;
  if (charge_modulus > 1) {
    if (physical_charges.size() != local_vector.size()) {
      throw InvalidArgument("product_state: one charge per physical state required");
    }
    int found = -1;
    for (std::size_t s = 0; s < local_vector.size(); ++s) {
      if (local_vector[s] == cplx{0.0, 0.0}) continue;
      if (found >= 0 && physical_charges[s] != found) {
        throw InvalidArgument("product_state: local vector mixes charge sectors");
      }
      found = physical_charges[s];
    }
    charge = found;
    if (mod_charge(2 * charge, charge_modulus) != 0) {
      throw InvalidArgument("product_state: local charge incompatible with a two-site unit cell");
    }
    mps.physical_charges = std::move(physical_charges);
  }

  std::vector<cplx> v(local_vector.begin(), local_vector.end());
  for (auto& c : v) c /= nrm;
  const auto d = static_cast<std::size_t>(physical_dim);
  mps.b_a = Tensor({1, d, 1}, v);
  mps.b_b = Tensor({1, d, 1}, v);
  mps.lambda_a.values = {1.0};
  mps.lambda_b.values = {1.0};
  if (charge_modulus > 1) {
    mps.lambda_b.sectors = {0};
    mps.lambda_a.sectors = {charge};
  }
  attach_charges(mps);
  return mps;
}

double entanglement_entropy(const UniformMPS& mps, Bond bond) {
  const auto& s = mps.spectrum(bond);
  if (std::abs(s.norm_squared() - 1.0) > 1e-8) {
    throw InvalidArgument("entanglement_entropy: Schmidt spectrum is not normalized");
  }
  double e = 0.0;
  for (double v : s.values) {
    const double p = v * v;
    if (p > 0.0) e -= p * std::log(p);
  }
  return e;
}

TransferSpectrum transfer_spectrum(std::span<const Tensor> bra_sites, std::span<const Tensor> ket_sites,
                                   std::size_t n_values) {
  if (bra_sites.empty() || bra_sites.size() != ket_sites.size()) {
    throw InvalidArgument("transfer_spectrum: unit cells of different sizes");
  }
  std::vector<std::vector<MatrixC>> ket, bra;
  for (std::size_t i = 0; i < ket_sites.size(); ++i) {
    if (ket_sites[i].rank() != 3 || bra_sites[i].rank() != 3 || ket_sites[i].dim(1) != bra_sites[i].dim(1)) {
      throw InvalidArgument("transfer_spectrum: dimension mismatch");
    }
    ket.push_back(detail::slices(ket_sites[i]));
    bra.push_back(detail::slices(bra_sites[i]));
  }
  const auto chi_k = static_cast<Eigen::Index>(ket_sites.front().dim(0));
  const auto chi_b = static_cast<Eigen::Index>(bra_sites.front().dim(0));
  if (ket_sites.back().dim(2) != ket_sites.front().dim(0) || bra_sites.back().dim(2) != bra_sites.front().dim(0)) {
    throw InvalidArgument("transfer_spectrum: unit cell is not periodic");
  }

  const LinearMap map = [&](const VectorC& x, VectorC& y) {
    MatrixC m = Eigen::Map<const MatrixC>(x.data(), chi_k, chi_b);
    for (std::size_t i = ket.size(); i-- > 0;) m = detail::apply_right(ket[i], bra[i], m);
    y = Eigen::Map<const VectorC>(m.data(), m.size());
  };
  const std::size_t dim = static_cast<std::size_t>(chi_k * chi_b);
  const std::size_t n = std::min(n_values, dim);
  // Identity is the fixed point for identical right-canonical cells.
  VectorC start = VectorC::Zero(chi_k * chi_b);
  if (chi_k == chi_b) {
    for (Eigen::Index i = 0; i < chi_k; ++i) start(i * chi_k + i) = 1.0;
  }
  start += VectorC::Constant(start.size(), cplx(1e-3, 0.0));
  const auto res = leading_eigenpairs(map, dim, n, 1e-12, 2000, &start);
  TransferSpectrum out;
  out.eigenvalues = res.values;
  out.unit_cell_sites = static_cast<int>(ket_sites.size());
  out.degenerate_top = res.degenerate_top;
  return out;
}

TransferSpectrum transfer_spectrum(const UniformMPS& bra, const UniformMPS& ket, std::size_t n_values) {
  check_pair(bra, ket);
  const Tensor bs[] = {bra.b_a, bra.b_b};
  const Tensor ks[] = {ket.b_a, ket.b_b};
  return transfer_spectrum(bs, ks, n_values);
}

double fidelity_density(std::span<const Tensor> bra_sites, std::span<const Tensor> ket_sites) {
  const auto ts = transfer_spectrum(bra_sites, ket_sites, 1);
  const double top = std::abs(ts.eigenvalues.front());
  if (top == 0.0) return std::numeric_limits<double>::infinity();
  return -2.0 / ts.unit_cell_sites * std::log(top);
}

double fidelity_density(const UniformMPS& psi_t, const UniformMPS& psi_0) {
  check_pair(psi_t, psi_0);
  const Tensor bra[] = {psi_0.b_a, psi_0.b_b};
  const Tensor ket[] = {psi_t.b_a, psi_t.b_b};
  return fidelity_density(bra, ket);
}

double bond_expectation(const UniformMPS& mps, const MatrixC& op2, Bond bond) {
  const auto d = static_cast<Eigen::Index>(mps.physical_dim);
  if (op2.rows() != d * d || op2.cols() != d * d) throw InvalidArgument("bond_expectation: operator has wrong size");
  if (!is_hermitian(op2, 1e-10)) throw InvalidArgument("bond_expectation: operator is not Hermitian");
  const bool ab = bond == Bond::AB;
  const RowMatrixC theta = detail::two_site(ab ? mps.lambda_b.values : mps.lambda_a.values, ab ? mps.b_a : mps.b_b,
                                            ab ? mps.b_b : mps.b_a);
  const Eigen::Index r = theta.cols() / (d * d);
  cplx e = 0.0;
  for (Eigen::Index a = 0; a < theta.rows(); ++a) {
    Eigen::Map<const RowMatrixC> slice(theta.data() + a * theta.cols(), d * d, r);
    e += (slice.conjugate().cwiseProduct(op2 * slice)).sum();
  }
  return e.real();
}

double bond_expectation(const UniformMPS& mps, const MatrixC& op2) {
  return 0.5 * (bond_expectation(mps, op2, Bond::AB) + bond_expectation(mps, op2, Bond::BA));
}

double bond_expectation(const UniformMPS& mps, const Tensor& op2) {
  if (op2.rank() == 4) return bond_expectation(mps, op2.to_matrix(2));
  if (op2.rank() == 2) return bond_expectation(mps, op2.to_matrix(1));
  throw InvalidArgument("bond_expectation: operator must be a matrix or a rank-4 tensor");
}

double site_expectation(const UniformMPS& mps, const MatrixC& op1, Bond site) {
  const auto d = static_cast<Eigen::Index>(mps.physical_dim);
  if (op1.rows() != d || op1.cols() != d) throw InvalidArgument("site_expectation: operator has wrong size");
  const bool a_site = site == Bond::AB;
  const Tensor& b = a_site ? mps.b_a : mps.b_b;
  const auto& left = a_site ? mps.lambda_b.values : mps.lambda_a.values;
  const auto w = detail::wide(b);
  const Eigen::Index r = static_cast<Eigen::Index>(b.dim(2));
  cplx e = 0.0;
  for (Eigen::Index a = 0; a < w.rows(); ++a) {
    Eigen::Map<const RowMatrixC> slice(w.data() + a * w.cols(), d, r);
    e += left[a] * left[a] * (slice.conjugate().cwiseProduct(op1 * slice)).sum();
  }
  return e.real();
}

double correlation_length(const UniformMPS& mps) {
  if (mps.b_a.dim(0) * mps.b_a.dim(0) < 2) return 0.0;
  const auto ts = transfer_spectrum(mps, mps, 2);
  if (ts.eigenvalues.size() < 2) throw InvalidArgument("correlation_length: fewer than two eigenvalues");
  const double l1 = std::abs(ts.eigenvalues[0]);
  const double l2 = std::abs(ts.eigenvalues[1]);
  if (l2 <= 1e-300 || l2 / l1 < 1e-14) return 0.0;
  if (l1 - l2 < 1e-12 * l1) return std::numeric_limits<double>::infinity();
  return -static_cast<double>(ts.unit_cell_sites) / std::log(l2 / l1);
}

double canonical_residual(const UniformMPS& mps) {
  double worst = 0.0;
  auto check = [&](const Tensor& b, const SchmidtSpectrum& left, const SchmidtSpectrum& right) {
    const auto w = detail::wide(b);
    // Weighted by the left Schmidt values: truncation leaves isometry errors
    // of order s_cut^2 / lambda^2 along directions that carry weight lambda^2.
    const MatrixC right_env = w * w.adjoint() - MatrixC::Identity(w.rows(), w.rows());
    const Eigen::VectorXd lw = Eigen::Map<const Eigen::VectorXd>(left.values.data(), w.rows());
    worst = std::max(worst, (lw.asDiagonal() * right_env * lw.asDiagonal()).cwiseAbs().maxCoeff());
    const auto t = detail::tall(b);
    const auto d = static_cast<Eigen::Index>(b.dim(1));
    Eigen::VectorXd weights(t.rows());
    for (Eigen::Index i = 0; i < t.rows(); ++i) weights(i) = left.values[i / d] * left.values[i / d];
    const MatrixC left_env = t.adjoint() * weights.asDiagonal() * t;
    const auto r2 = squared(right.values);
    MatrixC target = MatrixC::Zero(t.cols(), t.cols());
    for (Eigen::Index i = 0; i < t.cols(); ++i) target(i, i) = r2[i];
    worst = std::max(worst, (left_env - target).cwiseAbs().maxCoeff());
  };
  check(mps.b_a, mps.lambda_b, mps.lambda_a);
  check(mps.b_b, mps.lambda_a, mps.lambda_b);
  return worst;
}

double norm_per_cell(const UniformMPS& mps) {
  return detail::two_site(mps.lambda_b.values, mps.b_a, mps.b_b).squaredNorm();
}

double covariance_violation(const UniformMPS& mps) {
  return std::max(mps.b_a.covariance_violation(), mps.b_b.covariance_violation());
}

}  // namespace kzmps
