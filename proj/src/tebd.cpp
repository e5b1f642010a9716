#include <cmath>

#include "imps_detail.hpp"
#include "kzmps/evolution.hpp"

namespace kzmps {

void apply_bond_gate(UniformMPS& mps, const MatrixC& gate, Bond bond, const TruncationParams& trunc,
                     TruncationStats& stats) {
  const auto d = static_cast<Eigen::Index>(mps.physical_dim);
  if (gate.rows() != d * d || gate.cols() != d * d) throw InvalidArgument("apply_bond_gate: gate has wrong size");
  const bool ab = bond == Bond::AB;
  Tensor& b1 = ab ? mps.b_a : mps.b_b;
  Tensor& b2 = ab ? mps.b_b : mps.b_a;
  SchmidtSpectrum& middle = ab ? mps.lambda_a : mps.lambda_b;
  const SchmidtSpectrum& left = ab ? mps.lambda_b : mps.lambda_a;
  const SchmidtSpectrum& right = left;

  const auto l = static_cast<Eigen::Index>(b1.dim(0));
  const auto r = static_cast<Eigen::Index>(b2.dim(2));
  // psi rows (a, s1), cols (s2, c).
  const RowMatrixC psi = detail::tall(b1) * detail::wide(b2);

  // Gate acts on (s1 s2): gather into d^2 x (l r), multiply, scatter back.
  MatrixC gathered(d * d, l * r);
  for (Eigen::Index a = 0; a < l; ++a)
    for (Eigen::Index s1 = 0; s1 < d; ++s1)
      for (Eigen::Index s2 = 0; s2 < d; ++s2)
        for (Eigen::Index c = 0; c < r; ++c) gathered(s1 * d + s2, a * r + c) = psi(a * d + s1, s2 * r + c);
  const MatrixC evolved = gate * gathered;
  RowMatrixC psi2(l * d, d * r), theta(l * d, d * r);
  for (Eigen::Index a = 0; a < l; ++a)
    for (Eigen::Index s1 = 0; s1 < d; ++s1)
      for (Eigen::Index s2 = 0; s2 < d; ++s2)
        for (Eigen::Index c = 0; c < r; ++c) psi2(a * d + s1, s2 * r + c) = evolved(s1 * d + s2, a * r + c);
  for (Eigen::Index i = 0; i < psi2.rows(); ++i) theta.row(i) = psi2.row(i) * left.values[i / d];

  std::vector<int> row_q, col_q;
  const int q = mps.charge_modulus;
  if (q > 1) {
    row_q.reserve(static_cast<std::size_t>(l * d));
    col_q.reserve(static_cast<std::size_t>(d * r));
    for (Eigen::Index a = 0; a < l; ++a)
      for (Eigen::Index s = 0; s < d; ++s) row_q.push_back(mod_charge(left.sectors[a] + mps.physical_charges[s], q));
    for (Eigen::Index s = 0; s < d; ++s)
      for (Eigen::Index c = 0; c < r; ++c) col_q.push_back(mod_charge(right.sectors[c] - mps.physical_charges[s], q));
  }
  const auto svd = truncated_block_svd(MatrixC(theta), row_q, col_q, trunc);
  const auto k = svd.vh.rows();

  Tensor nb2({static_cast<std::size_t>(k), static_cast<std::size_t>(d), static_cast<std::size_t>(r)});
  Eigen::Map<RowMatrixC>(nb2.data().data(), k, d * r) = svd.vh;
  Tensor nb1({static_cast<std::size_t>(l), static_cast<std::size_t>(d), static_cast<std::size_t>(k)});
  Eigen::Map<RowMatrixC>(nb1.data().data(), l * d, k) = psi2 * svd.vh.adjoint() / svd.norm;

  b1 = std::move(nb1);
  b2 = std::move(nb2);
  middle = svd.s;
  stats.discarded_weight += svd.s.discarded_weight;
  stats.multiplet_split = stats.multiplet_split || svd.multiplet_split;
  stats.max_bond_dim = std::max(stats.max_bond_dim, static_cast<std::size_t>(k));
  attach_charges(mps);
}

TruncationStats tebd_step_inplace(UniformMPS& mps, const GateSequence& gates, std::size_t chi_max, double cutoff) {
  const TruncationParams trunc{chi_max, cutoff};
  TruncationStats stats;
  for (const auto& layer : gates.layers) apply_bond_gate(mps, layer.gate, layer.bond, trunc, stats);
  if (canonical_residual(mps) > kCanonicalThreshold) {
    mps = canonicalize(mps, cutoff);
    ++stats.recanonicalizations;
    if (canonical_residual(mps) > kCanonicalThreshold) {
      throw ConvergenceError("tebd_step: canonical form could not be restored");
    }
  }
  stats.max_bond_dim = mps.max_bond_dim();
  return stats;
}

StepResult tebd_step(const UniformMPS& mps, const GateSequence& gates, std::size_t chi_max, double cutoff) {
  StepResult out{mps, {}};
  out.stats = tebd_step_inplace(out.state, gates, chi_max, cutoff);
  return out;
}

double energy_density(const UniformMPS& mps, const ModelSpec& model) {
  return bond_expectation(mps, bond_hamiltonian(model));
}

UniformMPS symmetric_product_state(const ModelSpec& model) {
  std::vector<cplx> local(static_cast<std::size_t>(model.physical_dim()), 0.0);
  local[0] = 1.0;
  return product_state(model.physical_dim(), local, model.q, charge_table(model));
}

GroundState cool_ground_state(const ModelSpec& model, const CoolingOptions& options) {
  if (options.schedule.empty()) throw InvalidArgument("cool_ground_state: empty schedule");
  for (std::size_t i = 1; i < options.schedule.size(); ++i) {
    if (!(options.schedule[i] < options.schedule[i - 1])) {
      throw InvalidArgument("cool_ground_state: schedule must be decreasing");
    }
  }
  if (options.check_every < 1) throw InvalidArgument("cool_ground_state: check_every must be positive");

  GroundState gs;
  gs.state = symmetric_product_state(model);
  const TruncationParams trunc{options.chi_max, options.cutoff};
  double energy = energy_density(gs.state, model);
  bool stage_converged = false;
  for (double dtau : options.schedule) {
    const auto gates = trotter_gates(model, dtau, options.order, TimeDirection::Imaginary);
    stage_converged = false;
    long stage_steps = 0;
    while (stage_steps < options.max_steps_per_stage) {
      // Non-unitary gates spoil the canonical form, but the B-form update
      // keeps the state exact up to truncation; restore it at each check.
      TruncationStats stats;
      for (int i = 0; i < options.check_every; ++i)
        for (const auto& layer : gates.layers) apply_bond_gate(gs.state, layer.gate, layer.bond, trunc, stats);
      gs.state = canonicalize(gs.state, options.cutoff);
      stage_steps += options.check_every;
      const double e = energy_density(gs.state, model);
      const double change = std::abs(e - energy);
      energy = e;
      if (change < options.tol) {
        stage_converged = true;
        break;
      }
    }
    gs.steps += stage_steps;
  }
  gs.state = canonicalize(gs.state, options.cutoff);
  gs.energy = energy_density(gs.state, model);
  gs.converged = stage_converged;
  if (!gs.converged) throw ConvergenceError("cool_ground_state: energy did not converge within the step budget");
  return gs;
}

UniformMPS evolve_fixed(const UniformMPS& start, const ModelSpec& model, double duration, long steps, int order,
                        std::size_t chi_max, double cutoff) {
  if (steps < 1) throw InvalidArgument("evolve_fixed: steps must be positive");
  const auto gates = trotter_gates(model, duration / static_cast<double>(steps), order, TimeDirection::Real);
  UniformMPS mps = start;
  for (long n = 0; n < steps; ++n) tebd_step_inplace(mps, gates, chi_max, cutoff);
  return mps;
}

}  // namespace kzmps
