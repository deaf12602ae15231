// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <span>
#include <utility>

#include "qcfe/wavefunction.hpp"

namespace qcfe {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Hamiltonian projected onto a determinant subspace. The matrix holds the
/// electronic part only; e_nuc is carried separately and added once to
/// eigenvalues, never to individual elements.
struct ProjectedHamiltonian {
  std::vector<Determinant> dets;
  SparseMatrix matrix;
  Eigen::VectorXd diagonal;
  double e_nuc = 0.0;

  Eigen::Index dim() const { return matrix.rows(); }
};

/// Build the projected Hamiltonian over a set of distinct, valid
/// determinants. Pairs with excitation degree >= 3 are pruned before any
/// element is computed; construction parallelizes over rows.
ProjectedHamiltonian build_subspace_matrix(const MolecularHamiltonian& h,
                                           std::span<const Determinant> dets);

struct DavidsonOptions {
  double tol = 1e-8;       // residual-norm convergence target
  int max_iter = 1000;     // outer iterations before NumericError
  int max_subspace = 20;   // restart threshold, keeps the current Ritz vector
  int block_size = 4;      // initial guesses on the lowest diagonal entries
};

struct GroundState {
  double energy;           // lowest eigenvalue + e_nuc
  Eigen::VectorXd coeffs;  // normalized, sign-canonicalized
  int iterations = 0;
  double residual = 0.0;
};

/// Iterative Davidson ground state with diagonal preconditioning.
GroundState davidson_ground(const SparseMatrix& m, double e_nuc,
                            const DavidsonOptions& opts = {});

/// Exact lowest eigenpair by dense symmetric diagonalization; the test
/// oracle for the Davidson path. Throws above `dense_limit`.
GroundState dense_ground(const SparseMatrix& m, double e_nuc,
                         int dense_limit = 4096);

std::pair<double, SubspaceWavefunction> davidson_ground(
    const ProjectedHamiltonian& ph, const DavidsonOptions& opts = {});
std::pair<double, SubspaceWavefunction> dense_ground(
    const ProjectedHamiltonian& ph, int dense_limit = 4096);

/// Dense diagonalization up to `dense_limit`, Davidson above it.
std::pair<double, SubspaceWavefunction> solve_ground(
    const ProjectedHamiltonian& ph, const DavidsonOptions& opts = {},
    int dense_limit = 128);

}  // namespace qcfe
