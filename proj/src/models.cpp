#include "kzmps/models.hpp"

#include <cmath>
#include <numbers>

namespace kzmps {

namespace {

MatrixC kron(const MatrixC& a, const MatrixC& b) {
  MatrixC out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

const cplx omega = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);

// Raw-basis single-site operators: (interaction operator, field operator).
// TFIM: (sigma^z, sigma^x). Potts: (eta, tau) with eta = diag(1, w, w^2)
// and tau |n> = |n + 1>.
std::pair<MatrixC, MatrixC> raw_operators(ModelKind kind) {
  if (kind == ModelKind::TFIM) {
    MatrixC z(2, 2), x(2, 2);
    z << 1, 0, 0, -1;
    x << 0, 1, 1, 0;
    return {z, x};
  }
  MatrixC eta = MatrixC::Zero(3, 3), tau = MatrixC::Zero(3, 3);
  for (int n = 0; n < 3; ++n) {
    eta(n, n) = std::pow(omega, n);
    tau((n + 1) % 3, n) = 1.0;
  }
  return {eta, tau};
}

MatrixC raw_field(const ModelSpec& m) {
  const auto [a, t] = raw_operators(m.kind);
  const MatrixC id = MatrixC::Identity(a.rows(), a.rows());
  const MatrixC site = m.kind == ModelKind::TFIM ? t : MatrixC(t + t.adjoint());
  return -0.5 * m.g * (kron(site, id) + kron(id, site));
}

MatrixC raw_interaction(const ModelSpec& m) {
  const auto [a, t] = raw_operators(m.kind);
  if (m.kind == ModelKind::TFIM) return -m.J * kron(a, a);
  return -m.J * (kron(a.adjoint(), a) + kron(a, a.adjoint()));
}

MatrixC to_working(const ModelSpec& m, const MatrixC& raw) {
  const MatrixC u = basis_rotation(m.kind);
  const MatrixC uu = kron(u, u);
  return uu.adjoint() * raw * uu;
}

// Rotations carry rounding noise; entries that are zero by symmetry are
// zeroed exactly so the block structure is structural.
MatrixC clean(const ModelSpec& m, MatrixC h) {
  const auto pc = pair_charges(m);
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      if (pc[i] != pc[j]) h(i, j) = 0.0;
      // Round-off from the basis rotation; entries are O(1).
      if (std::abs(h(i, j).real()) < 1e-14) h(i, j).real(0.0);
      if (std::abs(h(i, j).imag()) < 1e-14) h(i, j).imag(0.0);
    }
  return 0.5 * (h + h.adjoint());
}

}  // namespace

ModelSpec ModelSpec::tfim(double J, double g) { return ModelSpec{ModelKind::TFIM, J, g, 1.0, 1.0, 0.5, 2}; }

ModelSpec ModelSpec::potts3(double J, double g) {
  return ModelSpec{ModelKind::Potts3, J, g, 5.0 / 6.0, 1.0, 0.8, 3};
}

ModelSpec ModelSpec::from_name(const std::string& name, double J, double g) {
  if (name == "tfim") return tfim(J, g);
  if (name == "potts3" || name == "potts") return potts3(J, g);
  throw InvalidArgument("unknown model '" + name + "'");
}

ModelSpec ModelSpec::with_couplings(double j, double field) const {
  ModelSpec m = *this;
  m.J = j;
  m.g = field;
  return m;
}

Couplings sweep_couplings(double v, double t) { return {1.0 + v * t, 1.0 - v * t}; }

std::vector<int> charge_table(const ModelSpec& model) {
  if (model.kind == ModelKind::TFIM) return {0, 1};
  return {0, 1, 2};
}

MatrixC basis_rotation(ModelKind kind) {
  if (kind == ModelKind::TFIM) {
    MatrixC u(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    u << r, r, r, -r;  // |->, |<-
    return u;
  }
  // |k> = sum_n w^{-k n} |n> / sqrt 3, tau |k> = w^k |k>.
  MatrixC u(3, 3);
  for (int n = 0; n < 3; ++n)
    for (int k = 0; k < 3; ++k) u(n, k) = std::pow(omega, -((k * n) % 3)) / std::sqrt(3.0);
  return u;
}

std::vector<int> pair_charges(const ModelSpec& model) {
  const auto c = charge_table(model);
  std::vector<int> out;
  for (int a : c)
    for (int b : c) out.push_back(mod_charge(a + b, model.q));
  return out;
}

MatrixC bond_hamiltonian_raw(const ModelSpec& model) { return raw_interaction(model) + raw_field(model); }

MatrixC bond_field(const ModelSpec& model) { return clean(model, to_working(model, raw_field(model))); }

MatrixC bond_interaction(const ModelSpec& model) { return clean(model, to_working(model, raw_interaction(model))); }

MatrixC site_field(const ModelSpec& model) {
  const auto [a, t] = raw_operators(model.kind);
  const MatrixC site = model.kind == ModelKind::TFIM ? t : MatrixC(t + t.adjoint());
  const MatrixC u = basis_rotation(model.kind);
  const MatrixC rotated = -model.g * (u.adjoint() * site * u);
  return MatrixC(rotated.diagonal().real().cast<cplx>().asDiagonal());
}

MatrixC bond_hamiltonian(const ModelSpec& model) { return bond_interaction(model) + bond_field(model); }

std::vector<std::pair<Bond, double>> trotter_pattern(int order) {
  if (order == 2) return {{Bond::AB, 0.5}, {Bond::BA, 1.0}, {Bond::AB, 0.5}};
  if (order == 4) {
    const double w1 = kFourthOrderW1, w2 = kFourthOrderW2;
    return {{Bond::AB, 0.5 * w1},        {Bond::BA, w1}, {Bond::AB, 0.5 * (w1 + w2)}, {Bond::BA, w2},
            {Bond::AB, 0.5 * (w1 + w2)}, {Bond::BA, w1}, {Bond::AB, 0.5 * w1}};
  }
  throw InvalidArgument("unsupported Trotter order " + std::to_string(order));
}

GateSequence trotter_gates(const ModelSpec& model, double dt, int order, TimeDirection direction) {
  if (!(dt > 0.0)) throw InvalidArgument("trotter_gates: dt must be positive");
  GateSequence seq;
  seq.dt = dt;
  seq.order = order;
  seq.direction = direction;
  const MatrixC h = bond_hamiltonian(model);
  const auto charges = pair_charges(model);
  const cplx unit = direction == TimeDirection::Real ? cplx(0.0, -1.0) : cplx(-1.0, 0.0);
  for (const auto& [bond, w] : trotter_pattern(order)) {
    seq.layers.push_back({bond, w, hermitian_exponential_blocked(h, charges, unit * (w * dt))});
  }
  return seq;
}

}  // namespace kzmps
