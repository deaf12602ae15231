// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qcfe/determinant.hpp"

namespace qcfe {

/// Normalized expansion over an ordered list of distinct determinants.
struct SubspaceWavefunction {
  std::vector<Determinant> dets;
  Eigen::VectorXd coeffs;

  std::size_t size() const { return dets.size(); }
};

/// Throws unless dets are distinct, sizes agree and sum c_k^2 = 1 within tol.
void validate_wavefunction(const SubspaceWavefunction& psi,
                           double norm_tol = 1e-8);

/// Average spin-orbital occupations over 2M entries (alpha block first):
/// n_{p sigma} = sum_k c_k^2 x_{p sigma}(det_k).
using OccupancyVector = std::vector<double>;
OccupancyVector occupancies(const SubspaceWavefunction& psi, int n_orbitals);

}  // namespace qcfe
