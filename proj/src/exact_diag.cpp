#include <cmath>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "kzmps/oracle.hpp"

namespace kzmps {

namespace {

// Charge-0 sector of N sites with working-basis digits (site 0 most significant).
struct Sector {
  int n_sites, d, q;
  std::vector<long> states;
  std::unordered_map<long, Eigen::Index> index;
};

Sector charge_zero_sector(const ModelSpec& model, int n_sites) {
  Sector s{n_sites, model.physical_dim(), model.q, {}, {}};
  const auto charges = charge_table(model);
  long total = 1;
  for (int i = 0; i < n_sites; ++i) total *= s.d;
  for (long st = 0; st < total; ++st) {
    long rest = st;
    int c = 0;
    for (int i = 0; i < n_sites; ++i) {
      c += charges[static_cast<std::size_t>(rest % s.d)];
      rest /= s.d;
    }
    if (mod_charge(c, s.q) == 0) {
      s.index.emplace(st, static_cast<Eigen::Index>(s.states.size()));
      s.states.push_back(st);
    }
  }
  return s;
}

long power(int d, int e) {
  long p = 1;
  for (int i = 0; i < e; ++i) p *= d;
  return p;
}

// Sum of a two-site operator over the given bonds, restricted to the sector.
MatrixC sector_operator(const Sector& s, const MatrixC& op2, const std::vector<std::pair<int, int>>& bonds) {
  const auto dim = static_cast<Eigen::Index>(s.states.size());
  MatrixC h = MatrixC::Zero(dim, dim);
  for (const auto& [i, j] : bonds) {
    const long pi = power(s.d, s.n_sites - 1 - i), pj = power(s.d, s.n_sites - 1 - j);
    for (Eigen::Index col = 0; col < dim; ++col) {
      const long st = s.states[static_cast<std::size_t>(col)];
      const int a = static_cast<int>((st / pi) % s.d), b = static_cast<int>((st / pj) % s.d);
      const long base = st - a * pi - b * pj;
      for (int a2 = 0; a2 < s.d; ++a2)
        for (int b2 = 0; b2 < s.d; ++b2) {
          const cplx m = op2(a2 * s.d + b2, a * s.d + b);
          if (m == cplx(0.0, 0.0)) continue;
          const auto it = s.index.find(base + a2 * pi + b2 * pj);
          if (it == s.index.end()) throw Error("ed: operator leaves the charge-0 sector");
          h(it->second, col) += m;
        }
    }
  }
  return h;
}

MatrixC site_operator(const Sector& s, const MatrixC& op1, int site) {
  const auto d = op1.rows();
  MatrixC op2 = MatrixC::Zero(d * d, d * d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      for (Eigen::Index a2 = 0; a2 < d; ++a2) op2(a2 * d + b, a * d + b) = op1(a2, a);
  return sector_operator(s, op2, {{site, (site + 1) % s.n_sites}});
}

struct RingHamiltonian {
  MatrixC interaction;  // at J = 1
  MatrixC field;        // at g = 1
};

RingHamiltonian ring_hamiltonian(const ModelSpec& model, const Sector& s, bool periodic) {
  std::vector<std::pair<int, int>> bonds;
  for (int i = 0; i + 1 < s.n_sites; ++i) bonds.emplace_back(i, i + 1);
  if (periodic) bonds.emplace_back(s.n_sites - 1, 0);
  RingHamiltonian h{sector_operator(s, bond_interaction(model.with_couplings(1.0, 0.0)), bonds),
                    sector_operator(s, bond_field(model.with_couplings(0.0, 1.0)), bonds)};
  if (!periodic) {
    const MatrixC half = 0.5 * site_field(model.with_couplings(0.0, 1.0));
    h.field += site_operator(s, half, 0) + site_operator(s, half, s.n_sites - 1);
  }
  return h;
}

void check_budget(const ModelSpec& model, int n_sites) {
  const int limit = model.kind == ModelKind::TFIM ? 10 : 8;
  if (n_sites < 2 || n_sites > limit) {
    throw InvalidArgument("ed: ring size " + std::to_string(n_sites) + " outside the budget (2.." +
                          std::to_string(limit) + ")");
  }
}

std::pair<double, VectorC> lowest(const MatrixC& h) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(h);
  return {es.eigenvalues()(0), es.eigenvectors().col(0)};
}

VectorC product_zero(const Sector& s) {
  VectorC psi = VectorC::Zero(static_cast<Eigen::Index>(s.states.size()));
  psi(s.index.at(0)) = 1.0;
  return psi;
}

}  // namespace

OracleResult ed_sweep(const ModelSpec& model, int n_sites, double v, double dt) {
  check_budget(model, n_sites);
  if (!(v > 0.0) || !(dt > 0.0)) throw InvalidArgument("ed_sweep: v and dt must be positive");
  const Sector s = charge_zero_sector(model, n_sites);
  const auto h = ring_hamiltonian(model, s, true);
  const double duration = 1.0 / v;
  const long steps = static_cast<long>(std::ceil(duration / dt * (1.0 - 1e-12)));
  const double step = duration / static_cast<double>(steps);

  VectorC psi = product_zero(s);
  for (long n = 0; n < steps; ++n) {
    const auto c = sweep_couplings(v, -duration + (static_cast<double>(n) + 0.5) * step);
    const MatrixC hn = c.J * h.interaction + c.g * h.field;
    psi = hermitian_exponential(hn, cplx(0.0, -step)) * psi;
  }
  const MatrixC h1 = h.interaction + h.field;
  const auto [e0, gs] = lowest(h1);
  const double overlap = std::norm(gs.dot(psi));
  const double n = static_cast<double>(n_sites);
  OracleResult out;
  out.method = "ed";
  out.dt = dt;
  out.f = -std::log(overlap) / n;
  out.eps_ex = (psi.dot(h1 * psi).real() - e0) / n;
  return out;
}

double ed_static_fidelity(const ModelSpec& model, int n_sites) {
  check_budget(model, n_sites);
  const Sector s = charge_zero_sector(model, n_sites);
  const auto h = ring_hamiltonian(model, s, true);
  const auto [e0, gs] = lowest(h.interaction + h.field);
  return -std::log(std::norm(gs(s.index.at(0)))) / n_sites;
}

EdGroundState ed_ground_state(const ModelSpec& model, int n_sites, bool periodic) {
  check_budget(model, n_sites);
  const Sector s = charge_zero_sector(model, n_sites);
  const auto h = ring_hamiltonian(model, s, periodic);
  const auto [e0, gs] = lowest(model.J * h.interaction + model.g * h.field);
  const long half = power(s.d, n_sites / 2);
  const long other = power(s.d, n_sites - n_sites / 2);
  MatrixC m = MatrixC::Zero(half, other);
  for (std::size_t i = 0; i < s.states.size(); ++i) m(s.states[i] / other, s.states[i] % other) = gs(static_cast<Eigen::Index>(i));
  Eigen::BDCSVD<MatrixC> svd(m);
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const double p = svd.singularValues()(i) * svd.singularValues()(i);
    if (p > 1e-300) entropy -= p * std::log(p);
  }
  return {e0 / n_sites, entropy};
}

}  // namespace kzmps
