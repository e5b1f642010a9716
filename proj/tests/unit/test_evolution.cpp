#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "kzmps/evolution.hpp"
#include "kzmps/oracle.hpp"

using namespace kzmps;
using test::random_mps;

namespace {

CoolingOptions quick_cooling(std::size_t chi) {
  CoolingOptions o;
  o.chi_max = chi;
  o.schedule = {0.1, 0.05};
  o.tol = 1e-9;
  o.check_every = 20;
  return o;
}

const GroundState& critical_tfim_chi8() {
  static const GroundState gs = cool_ground_state(ModelSpec::tfim(), quick_cooling(8));
  return gs;
}

}  // namespace

TEST(RealTime, PreservesNormAndSymmetry) {
  std::mt19937 rng(21);
  for (const auto& model : {ModelSpec::tfim(1.0, 0.6), ModelSpec::potts3(1.0, 0.6)}) {
    auto mps = random_mps(model, 6, rng);
    const auto gates = trotter_gates(model, 0.05, 4, TimeDirection::Real);
    for (int i = 0; i < 10; ++i) {
      tebd_step_inplace(mps, gates, 16, 1e-12);
      EXPECT_NEAR(norm_per_cell(mps), 1.0, 1e-10);
      EXPECT_EQ(covariance_violation(mps), 0.0);
      EXPECT_LT(canonical_residual(mps), kCanonicalThreshold);
    }
  }
}

TEST(RealTime, EnergyConservedAtFixedCouplings) {
  std::mt19937 rng(22);
  const auto model = ModelSpec::tfim(1.0, 0.6);
  auto mps = random_mps(model, 4, rng);
  const double e0 = energy_density(mps, model);
  mps = evolve_fixed(mps, model, 0.2, 10, 4, 64, 1e-12);
  EXPECT_NEAR(energy_density(mps, model), e0, 1e-6);
}

TEST(ImaginaryTime, StepLowersEnergy) {
  std::mt19937 rng(23);
  const auto model = ModelSpec::tfim(1.0, 1.0);
  const auto gates = trotter_gates(model, 0.05, 4, TimeDirection::Imaginary);
  for (int i = 0; i < 20; ++i) {
    const auto mps = random_mps(model, 4, rng);
    auto next = mps;
    TruncationStats stats;
    for (const auto& layer : gates.layers) apply_bond_gate(next, layer.gate, layer.bond, {64, 0.0}, stats);
    next = canonicalize(next, 0.0);
    EXPECT_LT(energy_density(next, model), energy_density(mps, model));
  }
}

TEST(Cooling, OffCriticalTfimMatchesExact) {
  CoolingOptions o;
  o.chi_max = 8;
  o.schedule = {0.1, 0.05, 0.01};
  o.tol = 1e-12;
  const auto gs = cool_ground_state(ModelSpec::tfim(1.0, 2.0), o);
  EXPECT_TRUE(gs.converged);
  EXPECT_NEAR(gs.energy, ground_energy_density_exact(1.0, 2.0), 1e-7);
  EXPECT_EQ(covariance_violation(gs.state), 0.0);
}

TEST(Cooling, PottsStaysSymmetric) {
  const auto model = ModelSpec::potts3();
  const auto gs = cool_ground_state(model, quick_cooling(6));
  EXPECT_EQ(covariance_violation(gs.state), 0.0);
  EXPECT_LT(gs.energy, energy_density(symmetric_product_state(model), model));
  EXPECT_LT(canonical_residual(gs.state), 1e-10);
}

TEST(Cooling, RejectsBadSchedules) {
  CoolingOptions o;
  o.schedule = {};
  EXPECT_THROW(cool_ground_state(ModelSpec::tfim(), o), InvalidArgument);
  o.schedule = {0.01, 0.1};
  EXPECT_THROW(cool_ground_state(ModelSpec::tfim(), o), InvalidArgument);
  o = quick_cooling(4);
  o.max_steps_per_stage = 20;
  o.tol = 1e-15;
  EXPECT_THROW(cool_ground_state(ModelSpec::tfim(), o), ConvergenceError);
}

TEST(Sweep, StepCount) {
  EXPECT_EQ(sweep_steps(1.0, 0.01), 100);
  EXPECT_EQ(sweep_steps(0.1, 0.005), 2000);
  EXPECT_EQ(sweep_steps(0.3, 0.01), 334);
}

TEST(Sweep, DeterministicReruns) {
  SweepConfig cfg;
  cfg.v = 1.0;
  cfg.chi_max = 8;
  cfg.dt = 0.02;
  SweepOptions opt;
  opt.ground = &critical_tfim_chi8();
  const auto a = run_sweep(cfg, opt);
  const auto b = run_sweep(cfg, opt);
  EXPECT_TRUE(a.final_state == b.final_state);
  EXPECT_EQ(a.f, b.f);
  EXPECT_EQ(a.eps_ex, b.eps_ex);
  EXPECT_EQ(a.steps, 50);
  EXPECT_EQ(covariance_violation(a.final_state), 0.0);
  ASSERT_FALSE(a.series.empty());
  EXPECT_NEAR(a.series.back().t, 0.0, 1e-12);
}

TEST(Sweep, ResumeMatchesUninterrupted) {
  SweepConfig cfg;
  cfg.v = 1.0;
  cfg.chi_max = 8;
  cfg.dt = 0.02;
  cfg.record_every = 10;
  SweepOptions opt;
  opt.ground = &critical_tfim_chi8();
  const auto full = run_sweep(cfg, opt);

  const auto path = std::filesystem::temp_directory_path() / "kzmps_resume.ckpt";
  std::filesystem::remove(path);
  opt.checkpoint = path;
  opt.stop_after = 23;
  const auto part = run_sweep(cfg, opt);
  EXPECT_FALSE(part.complete);
  ASSERT_TRUE(std::filesystem::exists(path));
  EXPECT_EQ(load_checkpoint(path).step, 23);

  opt.stop_after = 0;
  const auto resumed = run_sweep(cfg, opt);
  EXPECT_TRUE(resumed.complete);
  EXPECT_FALSE(std::filesystem::exists(path));
  EXPECT_TRUE(resumed.final_state == full.final_state);
  EXPECT_EQ(resumed.f, full.f);
  EXPECT_EQ(resumed.series.size(), full.series.size());
}

TEST(Sweep, RejectsOversizedRuns) {
  SweepConfig cfg;
  cfg.v = 0.01;
  cfg.dt = 0.01;
  SweepOptions opt;
  opt.max_steps = 1000;
  EXPECT_THROW(run_sweep(cfg, opt), InvalidArgument);
  opt.max_steps = 0;
  opt.stop_after = 5;
  EXPECT_THROW(run_sweep(cfg, opt), InvalidArgument);
}

TEST(Sweep, FastTfimNearFreeFermions) {
  SweepConfig cfg;
  cfg.v = 1.0;
  cfg.chi_max = 8;
  cfg.dt = 0.01;
  SweepOptions opt;
  opt.ground = &critical_tfim_chi8();
  const auto rec = run_sweep(cfg, opt);
  const auto ff = free_fermion_sweep(1.0);
  EXPECT_NEAR(rec.f / ff.f, 1.0, 0.05);
  EXPECT_NEAR(rec.eps_ex / ff.eps_ex, 1.0, 0.05);
}

TEST(Checkpoint, RoundTrip) {
  std::mt19937 rng(24);
  SweepCheckpoint cp{17, random_mps(ModelSpec::potts3(), 4, rng), {{-0.5, -1.1, 0.3, 4, 1e-9}, {-0.4, -1.2, 0.4, 4, 0.0}}};
  const auto path = std::filesystem::temp_directory_path() / "kzmps_cp.ckpt";
  save_checkpoint(path, cp);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.step, 17);
  EXPECT_TRUE(back.state == cp.state);
  ASSERT_EQ(back.series.size(), 2u);
  EXPECT_EQ(back.series[0].truncation_weight, 1e-9);
  EXPECT_EQ(back.series[1].max_bond_dim, 4u);
  std::filesystem::remove(path);
}
