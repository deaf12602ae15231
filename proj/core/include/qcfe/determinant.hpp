// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qcfe/integrals.hpp"

namespace qcfe {

/// Slater determinant as paired occupancy masks over M <= 64 spatial
/// orbitals: bit p of `alpha` (`beta`) set means spin-orbital p-alpha
/// (p-beta) is occupied.
///
/// Canonical spin-orbital ordering everywhere in this library: alpha
/// orbitals 0..M-1 first, then beta orbitals M..2M-1. Fermionic phases,
/// bitstring text files and the samplers all follow this order.
struct Determinant {
  std::uint64_t alpha = 0;
  std::uint64_t beta = 0;

  friend auto operator<=>(const Determinant&, const Determinant&) = default;
};

inline int n_alpha_of(const Determinant& d) { return std::popcount(d.alpha); }
inline int n_beta_of(const Determinant& d) { return std::popcount(d.beta); }

/// True when the occupancies match the Hamiltonian's electron counts and no
/// bit exceeds its orbital range.
bool is_valid_for(const Determinant& d, const MolecularHamiltonian& h);

/// Number of single excitations separating a and b:
/// (popcount(a.alpha^b.alpha) + popcount(a.beta^b.beta)) / 2.
int excitation_degree(const Determinant& a, const Determinant& b);

/// Matrix element <a|H|b> by the Slater-Condon rules. Exactly zero for
/// excitation degree >= 3. The nuclear repulsion is NOT included here; it is
/// added once at the subspace-eigenvalue level.
double slater_condon_element(const MolecularHamiltonian& h,
                             const Determinant& a, const Determinant& b);

struct SingleExcitation {
  Determinant det;
  int phase;  // +1 or -1
};

/// All spin-preserving single excitations a+_{a sigma} a_{i sigma} |d> with
/// their fermionic phases. Count is sum over spins of N_sigma (M - N_sigma).
std::vector<SingleExcitation> enumerate_singles(const Determinant& d,
                                                int n_orbitals);

struct AppliedExcitation {
  Determinant det;
  int gamma;  // -1, 0 or +1
};

/// Apply a+_{create} a_{annihilate} on spin-orbital indices in [0, 2M).
/// gamma = 0 when the excitation annihilates the state; create == annihilate
/// on an occupied orbital is the number operator (gamma = +1).
AppliedExcitation apply_excitation(const Determinant& d, int create_so,
                                   int annihilate_so, int n_orbitals);

/// Text form used by sample files: 2M characters, leftmost = alpha orbital 0,
/// then the beta block; '1' = occupied.
std::string to_bitstring(const Determinant& d, int n_orbitals);
Determinant determinant_from_bitstring(std::string_view s);

/// All determinants with the given electron counts, sorted by (alpha, beta)
/// mask. Size is C(M, n_alpha) * C(M, n_beta).
std::vector<Determinant> enumerate_fci_space(int n_orbitals, int n_alpha,
                                             int n_beta);

/// Aufbau reference: the lowest n_alpha / n_beta orbitals occupied.
Determinant reference_determinant(const MolecularHamiltonian& h);

}  // namespace qcfe
