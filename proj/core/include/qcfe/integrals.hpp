// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace qcfe {

/// Second-quantized molecular Hamiltonian in a fixed spatial-orbital basis:
/// one-electron integrals h_pq, two-electron integrals (pq|rs) in chemists'
/// notation, nuclear repulsion, and electron counts per spin.
///
/// Orbital indices are 0-based throughout the in-memory API; the FCIDUMP
/// text interchange uses the conventional 1-based indices. Two-electron
/// storage is a flat canonical-index map over the 8-fold permutation classes
/// (pq|rs)=(qp|rs)=(pq|sr)=(rs|pq)=..., so a query through any permutation
/// returns the identical stored value. Immutable use after construction is
/// safe from any number of threads.
class MolecularHamiltonian {
 public:
  MolecularHamiltonian(int n_orbitals, int n_alpha, int n_beta);

  int n_orbitals() const noexcept { return norb_; }
  int n_alpha() const noexcept { return n_alpha_; }
  int n_beta() const noexcept { return n_beta_; }

  double e_nuc() const noexcept { return e_nuc_; }
  void set_e_nuc(double value) noexcept { e_nuc_ = value; }

  double one_body(int p, int q) const;
  void set_one_body(int p, int q, double value);

  /// Chemists' notation (pq|rs); any of the 8 equivalent index orders.
  double two_body(int p, int q, int r, int s) const;
  void set_two_body(int p, int q, int r, int s, double value);

 private:
  std::size_t pair_index(int a, int b) const;
  std::size_t quad_index(int p, int q, int r, int s) const;
  void check_index(int p) const;

  int norb_;
  int n_alpha_;
  int n_beta_;
  double e_nuc_ = 0.0;
  std::vector<double> h_;
  std::vector<double> v_;
};

/// Parse the FCIDUMP interchange format. Accepts both `&FCI ... &END` and
/// `&FCI ... /` namelist styles; ORBSYM/ISYM are read and ignored. Every
/// malformed input raises ValidationError carrying the offending line number.
MolecularHamiltonian parse_fcidump(std::istream& in);
MolecularHamiltonian parse_fcidump_file(const std::string& path);

/// Canonical FCIDUMP writer: exactly one line per 8-fold symmetry class,
/// shortest round-trip number formatting, nuclear repulsion last.
/// parse_fcidump(write_fcidump(H)) reproduces H bit-exactly.
void write_fcidump(const MolecularHamiltonian& h, std::ostream& out);
void write_fcidump_file(const MolecularHamiltonian& h, const std::string& path);

}  // namespace qcfe
