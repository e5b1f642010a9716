#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "kzmps/imps.hpp"
#include "kzmps/models.hpp"

namespace kzmps {

/// Residual above which the state is re-canonicalized after a step.
inline constexpr double kCanonicalThreshold = 1e-6;

struct TruncationStats {
  double discarded_weight = 0.0;  // summed over the gates of the step
  std::size_t max_bond_dim = 0;
  bool multiplet_split = false;
  int recanonicalizations = 0;
};

struct StepResult {
  UniformMPS state;
  TruncationStats stats;
};

/// Apply one two-site gate (d^2 x d^2) to the chosen bond of the unit cell
/// and truncate. Uses the inverse-free update: no Schmidt value is divided.
void apply_bond_gate(UniformMPS& mps, const MatrixC& gate, Bond bond, const TruncationParams& trunc,
                     TruncationStats& stats);

/// One Trotter step: every layer of `gates` in order, then a canonical-form
/// check (re-canonicalizing above kCanonicalThreshold).
StepResult tebd_step(const UniformMPS& mps, const GateSequence& gates, std::size_t chi_max, double cutoff);
TruncationStats tebd_step_inplace(UniformMPS& mps, const GateSequence& gates, std::size_t chi_max, double cutoff);

/// Energy density of `mps` for the bond Hamiltonian of `model`.
double energy_density(const UniformMPS& mps, const ModelSpec& model);

/// Charge-0 working-basis product state (ground state at J = 0, g > 0).
UniformMPS symmetric_product_state(const ModelSpec& model);

struct CoolingOptions {
  std::size_t chi_max = 16;
  double cutoff = 1e-12;
  std::vector<double> schedule{0.1, 0.05, 0.01, 0.005, 0.001};
  double tol = 1e-12;
  int check_every = 100;
  long max_steps_per_stage = 100000;
  int order = 4;
};

struct GroundState {
  UniformMPS state;
  double energy = 0.0;
  long steps = 0;
  bool converged = false;
};

/// Imaginary-time TEBD from the charge-0 product state. Each stage of the
/// schedule runs until the energy changes by less than tol over
/// check_every steps. The returned state is re-canonicalized.
GroundState cool_ground_state(const ModelSpec& model, const CoolingOptions& options);

struct SweepConfig {
  ModelSpec model = ModelSpec::tfim();
  double v = 0.1;
  std::size_t chi_max = 16;
  double cutoff = 1e-12;
  double dt = 0.005;
  int trotter_order = 4;
  int record_every = 50;
};

/// ceil(1 / (v dt)), with a guard against rounding in the quotient.
long sweep_steps(double v, double dt);

struct SeriesPoint {
  double t;
  double energy;
  double entropy;
  std::size_t max_bond_dim;
  double truncation_weight;
};

struct RunRecord {
  SweepConfig config;
  std::vector<SeriesPoint> series;
  UniformMPS final_state;
  double ground_energy = 0.0;
  double energy_final = 0.0;
  double f = 0.0;
  double eps_ex = 0.0;
  bool eps_clamped = false;
  double entropy_final = 0.0;
  double xi_kz = 0.0;
  long steps = 0;
  double wall_seconds = 0.0;
  bool complete = true;  // false when stopped early with a checkpoint
};

struct SweepCheckpoint {
  long step = 0;
  UniformMPS state;
  std::vector<SeriesPoint> series;
};

void save_checkpoint(const std::filesystem::path& path, const SweepCheckpoint& cp);
SweepCheckpoint load_checkpoint(const std::filesystem::path& path);

struct SweepOptions {
  /// Reference ground state at (1, 1); cooled with the sweep's chi and
  /// cutoff when null.
  const GroundState* ground = nullptr;
  std::filesystem::path checkpoint;  // empty: no checkpoints
  double checkpoint_seconds = 300.0;
  /// Largest number of steps accepted; 0 means no limit.
  long max_steps = 0;
  /// Stop after this many steps of the sweep, leaving a checkpoint (needs a
  /// checkpoint path); 0 runs to the end.
  long stop_after = 0;
};

/// Kibble-Zurek sweep from (J, g) = (0, 2) at t = -1/v to (1, 1) at t = 0.
RunRecord run_sweep(const SweepConfig& config, const SweepOptions& options = {});

/// Real-time evolution at fixed couplings for a duration, with the given
/// step count. Used for Trotter convergence studies.
UniformMPS evolve_fixed(const UniformMPS& start, const ModelSpec& model, double duration, long steps,
                        int order, std::size_t chi_max, double cutoff);

}  // namespace kzmps
