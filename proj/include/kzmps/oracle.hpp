#pragma once

#include <string>
#include <vector>

#include "kzmps/models.hpp"

namespace kzmps {

struct OracleResult {
  std::vector<double> k;
  std::vector<double> p;  // excitation probability per mode
  double n_ex = 0.0;
  double eps_ex = 0.0;
  double f = 0.0;
  std::string method;  // "free-fermion" or "ed"
  double dt = 0.0;
  double tol = 0.0;
};

/// Mode Hamiltonian h_k = 2[(g - J cos k) sigma^z + J sin k sigma^x].
/// Its positive eigenvalue eps_k = 2 sqrt((g - J cos k)^2 + (J sin k)^2).
double mode_energy(double k, double J, double g);

/// Excitation probability of mode k after the sweep J = 1 + v t,
/// g = 1 - v t from t = -1/v to 0, integrated with classic RK4 at a step
/// no larger than dt, starting in the ground state of h_k(-1/v) and
/// projected on the excited state of h_k(0).
double mode_excitation(double k, double v, double dt);

struct FreeFermionOptions {
  double dt = 1e-3;
  int points = 2001;        // Simpson nodes on [0, pi], odd
  double quad_tol = 1e-8;   // refinement stops when doubling changes all outputs by less
  int max_points = 16001;
  bool check_step = false;  // halve dt and require agreement to step_tol
  double step_tol = 1e-8;
};

/// Thermodynamic limit: n = (1/pi) int P, eps = (1/pi) int eps_k(0) P,
/// f = -(1/2pi) int log(1 - P), over k in [0, pi] by composite Simpson with
/// the endpoint limits P(0) = 1/2 and P(pi) = 0.
OracleResult free_fermion_sweep(double v, const FreeFermionOptions& options = {});

/// Ring of N sites, even-parity sector: k = pi (2m + 1) / N, m < N / 2, with
/// n = (2/N) sum P, eps = (2/N) sum eps_k P, f = -(1/N) sum log(1 - P).
OracleResult free_fermion_sweep_finite(double v, int n_sites, double dt = 1e-3);

/// Values at step dt and dt / 2 combined by fourth-order Richardson
/// extrapolation.
OracleResult free_fermion_richardson(double v, const FreeFermionOptions& options);

/// e0 = -(1/2pi) int_0^{2pi} sqrt((g - J cos k)^2 + (J sin k)^2) dk by
/// adaptive Simpson quadrature.
double ground_energy_density_exact(double J, double g, double tol = 1e-12);

/// Dense sweep of a periodic ring in the charge-0 sector with the
/// midpoint-sampled piecewise-constant propagator.
OracleResult ed_sweep(const ModelSpec& model, int n_sites, double v, double dt);

/// -(1/N) log |<GS(1,1)|product>|^2 for the charge-0 product state.
double ed_static_fidelity(const ModelSpec& model, int n_sites);

/// Ground state of the ring in the charge-0 sector at the model's couplings:
/// energy per site and the reduced half-ring entanglement entropy.
struct EdGroundState {
  double energy_density;
  double half_chain_entropy;
};
EdGroundState ed_ground_state(const ModelSpec& model, int n_sites, bool periodic = true);

}  // namespace kzmps
