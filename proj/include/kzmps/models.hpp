#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kzmps/imps.hpp"

namespace kzmps {

enum class ModelKind { TFIM, Potts3 };

/// Model identity, couplings and critical data.
struct ModelSpec {
  ModelKind kind = ModelKind::TFIM;
  double J = 1.0;
  double g = 1.0;
  double nu = 1.0;
  double z = 1.0;
  double c = 0.5;
  int q = 2;

  static ModelSpec tfim(double J = 1.0, double g = 1.0);
  static ModelSpec potts3(double J = 1.0, double g = 1.0);
  static ModelSpec from_name(const std::string& name, double J = 1.0, double g = 1.0);

  int physical_dim() const { return kind == ModelKind::TFIM ? 2 : 3; }
  std::string name() const { return kind == ModelKind::TFIM ? "tfim" : "potts3"; }
  ModelSpec with_couplings(double j, double field) const;

  bool operator==(const ModelSpec&) const = default;
};

/// Couplings of the sweep schedule J = 1 + v t, g = 1 - v t.
struct Couplings {
  double J;
  double g;
};
Couplings sweep_couplings(double v, double t);

/// Z_q charge of each working-basis state: sigma^x eigenbasis for the TFIM,
/// tau eigenbasis for the Potts model.
std::vector<int> charge_table(const ModelSpec& model);

/// Single-site operators in the raw basis (sigma^z diagonal for the TFIM,
/// eta diagonal for the Potts model) and the unitary whose columns are the
/// working-basis states written in the raw basis.
MatrixC basis_rotation(ModelKind kind);

/// Two-site bond Hamiltonian (d^2 x d^2, row index s1 * d + s2) with the
/// on-site field split g/2 + g/2 between the two bonds of each site.
MatrixC bond_hamiltonian(const ModelSpec& model);
MatrixC bond_hamiltonian_raw(const ModelSpec& model);

/// Field term and interaction of one bond, working basis; the sum is
/// bond_hamiltonian.
MatrixC bond_field(const ModelSpec& model);
MatrixC bond_interaction(const ModelSpec& model);

/// Full on-site field term of one site, working basis.
MatrixC site_field(const ModelSpec& model);

/// Two-site charge (c1 + c2 mod q) per basis state of the bond.
std::vector<int> pair_charges(const ModelSpec& model);

enum class TimeDirection { Real, Imaginary };

struct GateLayer {
  Bond bond;       // AB: even bonds, BA: odd bonds
  double weight;   // fraction of dt
  MatrixC gate;    // d^2 x d^2
};

struct GateSequence {
  std::vector<GateLayer> layers;
  double dt = 0.0;
  int order = 2;
  TimeDirection direction = TimeDirection::Real;
};

/// Forest-Ruth weights of the fourth-order scheme.
inline const double kFourthOrderW1 = 1.0 / (2.0 - std::cbrt(2.0));
inline const double kFourthOrderW2 = 1.0 - 2.0 * kFourthOrderW1;

/// Layer pattern (bond, fraction of dt) of one Trotter step.
/// Order 2: AB(1/2) BA(1) AB(1/2). Order 4: three order-2 blocks with
/// steps w1, w2, w1, adjacent AB layers merged.
std::vector<std::pair<Bond, double>> trotter_pattern(int order);

/// exp(-i h w dt) (real time) or exp(-h w dt) (imaginary time) per layer.
GateSequence trotter_gates(const ModelSpec& model, double dt, int order, TimeDirection direction);

}  // namespace kzmps
