#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "kzmps/models.hpp"

using namespace kzmps;

namespace {

Eigen::VectorXd spectrum(const MatrixC& h) { return Eigen::SelfAdjointEigenSolver<MatrixC>(h).eigenvalues(); }

// Two-site operator acting on sites (i, i + 1 mod n) of an n-site ring.
MatrixC embed(const MatrixC& op, int d, int n, int i) {
  const int j = (i + 1) % n;
  long dim = 1;
  for (int k = 0; k < n; ++k) dim *= d;
  MatrixC out = MatrixC::Zero(dim, dim);
  std::vector<int> digits(n);
  for (long col = 0; col < dim; ++col) {
    long c = col;
    for (int k = n - 1; k >= 0; --k) {
      digits[k] = static_cast<int>(c % d);
      c /= d;
    }
    const int in = digits[i] * d + digits[j];
    for (int outp = 0; outp < d * d; ++outp) {
      const cplx amp = op(outp, in);
      if (amp == cplx(0.0)) continue;
      auto dg = digits;
      dg[i] = outp / d;
      dg[j] = outp % d;
      long row = 0;
      for (int k = 0; k < n; ++k) row = row * d + dg[k];
      out(row, col) += amp;
    }
  }
  return out;
}

// One Trotter step on a ring: AB layers act on even bonds, BA on odd bonds.
MatrixC ring_step(const GateSequence& seq, int d, int n) {
  long dim = 1;
  for (int k = 0; k < n; ++k) dim *= d;
  MatrixC u = MatrixC::Identity(dim, dim);
  for (const auto& layer : seq.layers) {
    for (int i = layer.bond == Bond::AB ? 0 : 1; i < n; i += 2) u = embed(layer.gate, d, n, i) * u;
  }
  return u;
}

MatrixC ring_hamiltonian(const ModelSpec& m, int n) {
  const int d = m.physical_dim();
  MatrixC h = MatrixC::Zero(1, 1);
  for (int i = 0; i < n; ++i) {
    const MatrixC b = embed(bond_hamiltonian(m), d, n, i);
    if (h.rows() == 1) h = MatrixC::Zero(b.rows(), b.cols());
    h += b;
  }
  return h;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= x.size(), my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST(ModelSpec, CriticalData) {
  const auto t = ModelSpec::tfim();
  EXPECT_EQ(t.nu, 1.0);
  EXPECT_EQ(t.z, 1.0);
  EXPECT_EQ(t.c, 0.5);
  EXPECT_EQ(t.q, 2);
  const auto p = ModelSpec::potts3();
  EXPECT_DOUBLE_EQ(p.nu, 5.0 / 6.0);
  EXPECT_EQ(p.c, 0.8);
  EXPECT_EQ(p.q, 3);
  EXPECT_EQ(ModelSpec::from_name("potts3").kind, ModelKind::Potts3);
  EXPECT_THROW(ModelSpec::from_name("xxz"), InvalidArgument);
}

TEST(Charges, Tables) {
  EXPECT_EQ(charge_table(ModelSpec::tfim()), (std::vector<int>{0, 1}));
  EXPECT_EQ(charge_table(ModelSpec::potts3()), (std::vector<int>{0, 1, 2}));
}

TEST(BondHamiltonian, PureIsing) {
  const MatrixC h = bond_hamiltonian(ModelSpec::tfim(1.0, 0.0));
  EXPECT_NEAR(spectrum(h)(0), -1.0, 1e-14);
  const MatrixC u = basis_rotation(ModelKind::TFIM);
  MatrixC z(2, 2);
  z << 1, 0, 0, -1;
  const MatrixC zd = u.adjoint() * z * u;
  MatrixC zz(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int e = 0; e < 2; ++e) zz(a * 2 + b, c * 2 + e) = zd(a, c) * zd(b, e);
  EXPECT_LT((h + zz).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BondHamiltonian, PureField) {
  const auto ev = spectrum(bond_hamiltonian(ModelSpec::tfim(0.0, 2.0)));
  const double expected[] = {-2, 0, 0, 2};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(ev(i), expected[i], 1e-14);
}

TEST(BondHamiltonian, PottsAlignedPair) {
  const MatrixC raw = bond_hamiltonian_raw(ModelSpec::potts3(1.0, 0.0));
  EXPECT_NEAR(raw(0, 0).real(), -2.0, 1e-14);
  EXPECT_NEAR(raw(0, 0).imag(), 0.0, 1e-14);
}

TEST(BondHamiltonian, ConservesCharge) {
  for (const auto& m : {ModelSpec::tfim(0.7, 1.3), ModelSpec::potts3(0.7, 1.3)}) {
    const MatrixC h = bond_hamiltonian(m);
    const auto pc = pair_charges(m);
    EXPECT_TRUE(is_hermitian(h));
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      for (Eigen::Index j = 0; j < h.cols(); ++j)
        if (pc[i] != pc[j]) EXPECT_EQ(h(i, j), cplx(0.0));
  }
}

TEST(BondHamiltonian, RotationPreservesSpectrum) {
  for (const auto& m : {ModelSpec::tfim(0.7, 1.3), ModelSpec::potts3(0.7, 1.3)}) {
    EXPECT_LT((spectrum(bond_hamiltonian(m)) - spectrum(bond_hamiltonian_raw(m))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BondHamiltonian, SplitsFieldEvenly) {
  for (const auto& m : {ModelSpec::tfim(0.0, 1.0), ModelSpec::potts3(0.0, 1.0)}) {
    const int d = m.physical_dim();
    const MatrixC f = site_field(m);
    MatrixC expected = MatrixC::Zero(d * d, d * d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) expected(a * d + b, a * d + b) = 0.5 * (f(a, a) + f(b, b));
    EXPECT_LT((bond_hamiltonian(m) - expected).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(TrotterGates, Patterns) {
  const auto two = trotter_pattern(2);
  ASSERT_EQ(two.size(), 3u);
  EXPECT_EQ(two[0].first, Bond::AB);
  EXPECT_EQ(two[1].second, 1.0);
  const auto four = trotter_pattern(4);
  ASSERT_EQ(four.size(), 7u);
  double ab = 0, ba = 0;
  for (const auto& [bond, w] : four) (bond == Bond::AB ? ab : ba) += w;
  EXPECT_NEAR(ab, 1.0, 1e-14);
  EXPECT_NEAR(ba, 1.0, 1e-14);
  EXPECT_NEAR(2 * kFourthOrderW1 + kFourthOrderW2, 1.0, 1e-15);
  EXPECT_THROW(trotter_pattern(3), InvalidArgument);
  EXPECT_THROW(trotter_gates(ModelSpec::tfim(), 0.0, 2, TimeDirection::Real), InvalidArgument);
}

TEST(TrotterGates, UnitaryAndPositive) {
  for (const auto& m : {ModelSpec::tfim(), ModelSpec::potts3(1.2, 0.8)}) {
    for (int order : {2, 4}) {
      const auto real = trotter_gates(m, 0.05, order, TimeDirection::Real);
      for (const auto& l : real.layers) {
        const auto n = l.gate.rows();
        EXPECT_LT((l.gate * l.gate.adjoint() - MatrixC::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
      }
      const auto imag = trotter_gates(m, 0.05, order, TimeDirection::Imaginary);
      for (const auto& l : imag.layers) {
        EXPECT_TRUE(is_hermitian(l.gate, 1e-10));
        EXPECT_GT(spectrum(l.gate).minCoeff(), 0.0);
      }
    }
  }
}

TEST(TrotterGates, ChargeLeakageIsZero) {
  for (const auto& m : {ModelSpec::tfim(), ModelSpec::potts3()}) {
    const auto pc = pair_charges(m);
    for (const auto& l : trotter_gates(m, 0.1, 4, TimeDirection::Real).layers)
      for (Eigen::Index i = 0; i < l.gate.rows(); ++i)
        for (Eigen::Index j = 0; j < l.gate.cols(); ++j)
          if (pc[i] != pc[j]) EXPECT_EQ(l.gate(i, j), cplx(0.0));
  }
}

TEST(TrotterGates, ZeroStepLimit) {
  for (double dt : {1e-3, 1e-4}) {
    for (const auto& l : trotter_gates(ModelSpec::potts3(), dt, 4, TimeDirection::Real).layers) {
      const auto n = l.gate.rows();
      EXPECT_LE((l.gate - MatrixC::Identity(n, n)).cwiseAbs().maxCoeff(), 10 * dt);
    }
  }
}

TEST(TrotterGates, LocalErrorOrder) {
  const auto model = ModelSpec::tfim(1.0, 0.7);
  const int n = 4;
  const MatrixC h = ring_hamiltonian(model, n);
  const std::vector<double> steps{0.1, 0.05, 0.025};
  for (int order : {2, 4}) {
    std::vector<double> errors;
    for (double dt : steps) {
      const MatrixC exact = hermitian_exponential(h, cplx(0.0, -dt));
      const MatrixC u = ring_step(trotter_gates(model, dt, order, TimeDirection::Real), 2, n);
      errors.push_back((u - exact).norm());
    }
    const double s = slope(steps, errors);
    if (order == 2) {
      EXPECT_NEAR(s, 3.0, 0.2);
    } else {
      EXPECT_NEAR(s, 5.0, 0.3);
    }
  }
}

TEST(Sweep, Schedule) {
  const auto start = sweep_couplings(0.1, -10.0);
  EXPECT_NEAR(start.J, 0.0, 1e-15);
  EXPECT_NEAR(start.g, 2.0, 1e-15);
  const auto end = sweep_couplings(0.1, 0.0);
  EXPECT_EQ(end.J, 1.0);
  EXPECT_EQ(end.g, 1.0);
}
