// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <vector>

#include "qcfe/eigensolver.hpp"

namespace qcfe {

/// One selection + diagonalization round of the iterative solver.
struct HciIteration {
  int iteration;
  std::size_t n_dets;
  double energy;
  double wall_seconds;
};

struct HciResult {
  double energy;
  SubspaceWavefunction wavefunction;
  std::vector<HciIteration> trace;
};

/// Grow the subspace by first-order importance: returns the current
/// determinant set united with every single or double excitation `a` of a
/// source determinant k satisfying |<a|H|det_k> c_k| > epsilon (strict).
/// Double-excitation candidates are screened through magnitude-sorted
/// integral tables, which prunes exactly at the criterion; singles are
/// evaluated directly. Output is sorted by bitmask.
std::vector<Determinant> heatbath_expand(const MolecularHamiltonian& h,
                                         const SubspaceWavefunction& psi,
                                         double epsilon);

/// Alternate heatbath_expand and Davidson until the determinant set stops
/// changing. The returned variational energy includes e_nuc and is an upper
/// bound on the FCI energy.
HciResult hci_solve(const MolecularHamiltonian& h, double epsilon,
                    const Determinant& initial,
                    const DavidsonOptions& opts = {}, int max_rounds = 200);

}  // namespace qcfe
