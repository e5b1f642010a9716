#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kzmps/analysis.hpp"
#include "kzmps/oracle.hpp"

using namespace kzmps;

TEST(FreeFermion, ModeEnergy) {
  EXPECT_NEAR(mode_energy(0.0, 1.0, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(mode_energy(std::numbers::pi, 1.0, 1.0), 4.0, 1e-14);
  EXPECT_NEAR(mode_energy(0.7, 0.0, 2.0), 4.0, 1e-14);
}

TEST(FreeFermion, GroundEnergy) {
  EXPECT_NEAR(ground_energy_density_exact(1.0, 1.0), -4.0 / std::numbers::pi, 1e-12);
  EXPECT_NEAR(ground_energy_density_exact(0.0, 1.0), -1.0, 1e-12);
  EXPECT_NEAR(ground_energy_density_exact(1.0, 0.0), -1.0, 1e-12);
  // Kramers-Wannier duality: e0(J, g) = e0(g, J).
  EXPECT_NEAR(ground_energy_density_exact(1.0, 0.3), ground_energy_density_exact(0.3, 1.0), 1e-12);
  EXPECT_THROW(ground_energy_density_exact(0.0, 0.0), InvalidArgument);
}

TEST(FreeFermion, ModeExcitationLimits) {
  // Sudden limit at k = pi: the initial state is already the final ground state.
  EXPECT_NEAR(mode_excitation(std::numbers::pi, 0.5, 1e-3), 0.0, 1e-10);
  // Slower sweeps excite less.
  double last = 1.0;
  for (double v : {1.0, 0.3, 0.1, 0.03}) {
    const double p = mode_excitation(0.5, v, 1e-3);
    EXPECT_GE(p, 0.0);
    EXPECT_LT(p, last);
    last = p;
  }
  EXPECT_THROW(mode_excitation(0.5, 0.0, 1e-3), InvalidArgument);
}

TEST(FreeFermion, ModeExcitationStepConvergence) {
  const double a = mode_excitation(0.4, 0.5, 1e-2), b = mode_excitation(0.4, 0.5, 5e-3);
  const double c = mode_excitation(0.4, 0.5, 2.5e-3);
  EXPECT_NEAR(std::log2(std::abs(a - b) / std::abs(b - c)), 4.0, 0.3);
}

TEST(FreeFermion, KibbleZurekExponents) {
  std::vector<std::pair<double, double>> n, f;
  FreeFermionOptions o;
  o.dt = 1e-2;
  o.quad_tol = 1e-6;
  for (double v : {0.005, 0.01, 0.02}) {
    const auto r = free_fermion_sweep(v, o);
    n.emplace_back(v, r.n_ex);
    f.emplace_back(v, r.f);
  }
  EXPECT_NEAR(fit_power_law(n).exponent, 0.5, 0.03);
  EXPECT_NEAR(fit_power_law(f).exponent, 0.5, 0.03);
}

TEST(FreeFermion, FidelityDensityRelation) {
  FreeFermionOptions o;
  o.dt = 1e-2;
  o.quad_tol = 1e-6;
  double last = 1.0;
  for (double v : {0.05, 0.02, 0.01}) {
    const auto r = free_fermion_sweep(v, o);
    const double dev = std::abs(2.0 * r.f / r.n_ex - 1.0);
    EXPECT_LT(dev, last);
    last = dev;
  }
}

TEST(FreeFermion, FiniteRingApproachesThermodynamicLimit) {
  const auto inf = free_fermion_sweep(1.0);
  const auto ring = free_fermion_sweep_finite(1.0, 200);
  EXPECT_NEAR(ring.f, inf.f, 1e-3);
  EXPECT_NEAR(ring.eps_ex, inf.eps_ex, 1e-3);
  EXPECT_THROW(free_fermion_sweep_finite(1.0, 7), InvalidArgument);
}

TEST(FreeFermion, RichardsonAgreesWithFineStep) {
  FreeFermionOptions o;
  o.dt = 0.02;
  const auto r = free_fermion_richardson(0.5, o);
  o.dt = 1e-3;
  const auto fine = free_fermion_sweep(0.5, o);
  EXPECT_NEAR(r.f, fine.f, 1e-7);
  EXPECT_NEAR(r.eps_ex, fine.eps_ex, 1e-7);
}

TEST(ExactDiag, MatchesFreeFermionRing) {
  for (double v : {1.0, 0.5}) {
    const auto ed = ed_sweep(ModelSpec::tfim(), 8, v, 1e-3);
    const auto ff = free_fermion_sweep_finite(v, 8, 1e-4);
    EXPECT_NEAR(ed.f, ff.f, 1e-4);
    EXPECT_NEAR(ed.eps_ex, ff.eps_ex, 1e-4);
  }
}

TEST(ExactDiag, TfimGroundEnergyOnRing) {
  const int n = 8;
  double expected = 0.0;
  for (int m = 0; m < n / 2; ++m) expected -= mode_energy(std::numbers::pi * (2 * m + 1) / n, 1.0, 1.0) / n;
  EXPECT_NEAR(ed_ground_state(ModelSpec::tfim(), n).energy_density, expected, 1e-10);
}

TEST(ExactDiag, PottsGroundStateBelowProduct) {
  const auto gs = ed_ground_state(ModelSpec::potts3(), 6);
  EXPECT_LT(gs.energy_density, -2.0);  // the charge-0 product state has -2
  EXPECT_GT(gs.half_chain_entropy, 0.0);
  EXPECT_GT(ed_static_fidelity(ModelSpec::potts3(), 6), 0.0);
}

TEST(ExactDiag, RejectsRingsOutsideBudget) {
  EXPECT_THROW(ed_sweep(ModelSpec::tfim(), 1, 1.0, 1e-3), InvalidArgument);
  EXPECT_THROW(ed_sweep(ModelSpec::potts3(), 40, 1.0, 1e-3), InvalidArgument);
}
