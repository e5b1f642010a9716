#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kzmps/linalg.hpp"
#include "kzmps/tensor.hpp"

namespace kzmps {

enum class Bond { AB, BA };

/// Infinite MPS with a two-site unit cell ... A B A B ... in Schmidt form.
///
/// Sites are stored right-canonically, b_a = Gamma_A lambda_a and
/// b_b = Gamma_B lambda_b, with legs (left bond, physical, right bond).
/// lambda_a lives on the A|B bond and lambda_b on the B|A bond. Bond
/// charge labels are the sectors of the Schmidt spectra: the Z_q charge of
/// everything to the left of the bond, so b[l, s, r] != 0 only if
/// label(r) == label(l) + charge(s) mod q.
struct UniformMPS {
  Tensor b_a;
  Tensor b_b;
  SchmidtSpectrum lambda_a;
  SchmidtSpectrum lambda_b;
  int physical_dim = 0;
  int charge_modulus = 1;
  std::vector<int> physical_charges;  // empty when charge_modulus == 1

  static constexpr int unit_cell_sites = 2;

  const SchmidtSpectrum& spectrum(Bond bond) const { return bond == Bond::AB ? lambda_a : lambda_b; }
  std::size_t bond_dim(Bond bond) const { return spectrum(bond).size(); }
  std::size_t max_bond_dim() const { return std::max(lambda_a.size(), lambda_b.size()); }

  /// Vidal tensors Gamma = b lambda^{-1}.
  Tensor gamma_a() const;
  Tensor gamma_b() const;

  bool operator==(const UniformMPS&) const = default;
};

struct TransferSpectrum {
  std::vector<cplx> eigenvalues;  // sorted by magnitude, descending
  int unit_cell_sites = UniformMPS::unit_cell_sites;
  bool degenerate_top = false;
};

/// chi = 1 state with the same local vector on every site. With
/// charge_modulus > 1 the vector must lie in one charge sector of
/// `physical_charges`.
UniformMPS product_state(int physical_dim, std::span<const cplx> local_vector, int charge_modulus = 1,
                         std::vector<int> physical_charges = {});

/// -sum lambda^2 log lambda^2 on the chosen bond.
double entanglement_entropy(const UniformMPS& mps, Bond bond);

/// Leading eigenvalues of the unit-cell transfer map built from the ket
/// tensors and the complex-conjugated bra tensors.
TransferSpectrum transfer_spectrum(const UniformMPS& bra, const UniformMPS& ket, std::size_t n_values);

/// Same map for raw unit-cell tensors (any gauge); used for gauge checks.
TransferSpectrum transfer_spectrum(std::span<const Tensor> bra_sites, std::span<const Tensor> ket_sites,
                                   std::size_t n_values);

/// Per-site fidelity density -(2 / sites) log|lambda_1| of the mixed
/// transfer map; +infinity for orthogonal states.
double fidelity_density(const UniformMPS& psi_t, const UniformMPS& psi_0);
double fidelity_density(std::span<const Tensor> bra_sites, std::span<const Tensor> ket_sites);

/// Average of <op2> over the A|B and B|A bonds. op2 is a Hermitian
/// two-site operator, either a (d,d,d,d) tensor or a d^2 x d^2 matrix,
/// with row index (s1 s2).
double bond_expectation(const UniformMPS& mps, const Tensor& op2);
double bond_expectation(const UniformMPS& mps, const MatrixC& op2);
double bond_expectation(const UniformMPS& mps, const MatrixC& op2, Bond bond);

/// <op1> on site A (Bond::AB) or site B (Bond::BA).
double site_expectation(const UniformMPS& mps, const MatrixC& op1, Bond site);

/// xi = -sites / log|lambda_2 / lambda_1| of the self transfer map.
/// Zero for a chi = 1 state, +infinity for degenerate leading magnitudes.
double correlation_length(const UniformMPS& mps);

/// Max deviation from the right-canonical (sum_s b b^dag = 1) and
/// left-canonical (sum_s b^dag lambda_l^2 b = lambda_r^2) conditions over
/// both sites. Both are weighted by the left Schmidt values, so the first is
/// measured as lambda_l (sum_s b b^dag - 1) lambda_l.
double canonical_residual(const UniformMPS& mps);

/// Norm of the unit cell, sum of lambda^2 on each bond (1 for normalized states).
double norm_per_cell(const UniformMPS& mps);

/// Largest |entry| violating charge covariance over both site tensors.
double covariance_violation(const UniformMPS& mps);

/// Bring arbitrary unit-cell tensors (left bond, phys, right bond) into
/// canonical Schmidt form. Singular values below cutoff * largest are
/// dropped. Labels are the bond charge labels (empty without symmetry).
UniformMPS canonicalize(const Tensor& site_a, const Tensor& site_b, int physical_dim, int charge_modulus,
                        std::vector<int> physical_charges, std::vector<int> labels_ba,
                        std::vector<int> labels_ab, double cutoff = 1e-14);
UniformMPS canonicalize(const UniformMPS& mps, double cutoff = 1e-14);

/// Recompute b_a / b_b charge metadata from the spectra. Called after
/// every structural update.
void attach_charges(UniformMPS& mps);

// Versioned binary container. Round trips are bit exact.
std::vector<std::uint8_t> serialize(const UniformMPS& mps);
UniformMPS deserialize(std::span<const std::uint8_t> bytes);
void save_state(const std::filesystem::path& path, const UniformMPS& mps);
UniformMPS load_state(const std::filesystem::path& path);

}  // namespace kzmps
