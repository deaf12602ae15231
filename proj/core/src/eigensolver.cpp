// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qcfe/errors.hpp"
#include "qcfe/rng.hpp"

namespace qcfe {

void validate_wavefunction(const SubspaceWavefunction& psi, double norm_tol) {
  if (psi.dets.size() != static_cast<std::size_t>(psi.coeffs.size()))
    throw ValidationError("wavefunction: dets/coeffs length mismatch");
  if (psi.dets.empty()) throw ValidationError("wavefunction: empty");
  auto sorted = psi.dets;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ValidationError("wavefunction: duplicate determinants");
  const double norm2 = psi.coeffs.squaredNorm();
  if (std::abs(norm2 - 1.0) > norm_tol)
    throw ValidationError("wavefunction: not normalized, |c|^2 = " +
                          std::to_string(norm2));
}

OccupancyVector occupancies(const SubspaceWavefunction& psi, int n_orbitals) {
  validate_wavefunction(psi);
  OccupancyVector n(2 * static_cast<std::size_t>(n_orbitals), 0.0);
  for (std::size_t k = 0; k < psi.dets.size(); ++k) {
    const double w = psi.coeffs[static_cast<Eigen::Index>(k)] *
                     psi.coeffs[static_cast<Eigen::Index>(k)];
    std::uint64_t a = psi.dets[k].alpha;
    while (a) {
      n[std::countr_zero(a)] += w;
      a &= a - 1;
    }
    std::uint64_t b = psi.dets[k].beta;
    while (b) {
      n[n_orbitals + std::countr_zero(b)] += w;
      b &= b - 1;
    }
  }
  return n;
}

ProjectedHamiltonian build_subspace_matrix(const MolecularHamiltonian& h,
                                           std::span<const Determinant> dets) {
  const std::size_t n = dets.size();
  if (n == 0) throw ValidationError("build_subspace_matrix: empty subspace");
  {
    std::vector<Determinant> sorted(dets.begin(), dets.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("build_subspace_matrix: duplicate determinants");
  }
  for (const auto& d : dets)
    if (!is_valid_for(d, h))
      throw ValidationError("build_subspace_matrix: invalid determinant");

  ProjectedHamiltonian ph;
  ph.dets.assign(dets.begin(), dets.end());
  ph.e_nuc = h.e_nuc();
  ph.diagonal.resize(static_cast<Eigen::Index>(n));

  using Triplet = Eigen::Triplet<double>;
  std::vector<std::vector<Triplet>> buckets;
  const std::size_t n_chunks = 64;
  buckets.resize(n_chunks);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) {
    auto& local = buckets[chunk];
    for (std::size_t k = chunk; k < n; k += n_chunks) {
      const Determinant& dk = dets[k];
      for (std::size_t l = k; l < n; ++l) {
        const Determinant& dl = dets[l];
        const int diff = std::popcount(dk.alpha ^ dl.alpha) +
                         std::popcount(dk.beta ^ dl.beta);
        if (diff > 4) continue;  // degree >= 3, element is exactly zero
        const double v = slater_condon_element(h, dk, dl);
        if (k == l) {
          ph.diagonal[static_cast<Eigen::Index>(k)] = v;
          if (v != 0.0) local.emplace_back(k, k, v);
        } else if (v != 0.0) {
          local.emplace_back(k, l, v);
          local.emplace_back(l, k, v);
        }
      }
    }
  }

  std::vector<Triplet> triplets;
  std::size_t total = 0;
  for (const auto& b : buckets) total += b.size();
  triplets.reserve(total);
  for (const auto& b : buckets)
    triplets.insert(triplets.end(), b.begin(), b.end());

  ph.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  ph.matrix.setFromTriplets(triplets.begin(), triplets.end());
  ph.matrix.makeCompressed();
  return ph;
}

namespace {

// Row-parallel CSR matvec; per-row accumulation order is fixed, so the
// result is bit-identical for any thread count.
Eigen::VectorXd matvec(const SparseMatrix& m, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(m.rows());
  const Eigen::Index rows = m.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      acc += it.value() * x[it.col()];
    y[r] = acc;
  }
  return y;
}

void canonicalize_sign(Eigen::VectorXd& v) {
  Eigen::Index imax = 0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      imax = i;
    }
  }
  if (v[imax] < 0.0) v = -v;
}

// indices of the k smallest diagonal entries, ties by index
std::vector<Eigen::Index> lowest_diagonal(const Eigen::VectorXd& diag, int k) {
  std::vector<Eigen::Index> idx(diag.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return diag[a] < diag[b];
  });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(k)));
  return idx;
}

// Twice-iterated modified Gram-Schmidt against the first `ncols` columns.
// Returns the norm of what is left.
double orthogonalize(const Eigen::MatrixXd& basis, Eigen::Index ncols,
                     Eigen::VectorXd& v) {
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < ncols; ++j)
      v -= basis.col(j).dot(v) * basis.col(j);
  return v.norm();
}

}  // namespace

GroundState davidson_ground(const SparseMatrix& m, double e_nuc,
                            const DavidsonOptions& opts) {
  const Eigen::Index n = m.rows();
  if (n < 1) throw ValidationError("davidson_ground: empty matrix");
  if (m.cols() != n) throw ValidationError("davidson_ground: not square");

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      if (it.col() == r) diag[r] = it.value();

  const int block = std::min<int>(opts.block_size, static_cast<int>(n));
  const int cap = std::max(opts.max_subspace, block) + 1;
  Eigen::MatrixXd basis(n, cap);
  Eigen::MatrixXd image(n, cap);  // image = m * basis
  Eigen::Index ncols = 0;
  for (Eigen::Index i : lowest_diagonal(diag, block)) {
    basis.col(ncols).setZero();
    basis.col(ncols)[i] = 1.0;
    image.col(ncols) = matvec(m, basis.col(ncols));
    ++ncols;
  }

  GroundState out;
  double theta = 0.0;
  Eigen::VectorXd ritz(n), residual(n);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    // Rayleigh-Ritz over the current trial space
    Eigen::MatrixXd g = basis.leftCols(ncols).transpose() * image.leftCols(ncols);
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::VectorXd s = es.eigenvectors().col(0);
    theta = es.eigenvalues()[0];
    ritz = basis.leftCols(ncols) * s;
    residual = image.leftCols(ncols) * s - theta * ritz;
    const double rnorm = residual.norm();

    out.iterations = iter;
    out.residual = rnorm;
    // ncols == n means the trial space is the full space: exact already
    if (rnorm <= opts.tol || ncols >= n) {
      out.energy = theta + e_nuc;
      out.coeffs = ritz.normalized();
      canonicalize_sign(out.coeffs);
      return out;
    }

    if (ncols >= opts.max_subspace) {
      // restart, keeping the current Ritz vector
      basis.col(0) = ritz.normalized();
      image.col(0) = matvec(m, basis.col(0));
      ncols = 1;
    }

    // diagonal preconditioner with clamped denominator
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double den = theta - diag[i];
      if (std::abs(den) < 1e-8) den = den < 0.0 ? -1e-8 : 1e-8;
      t[i] = residual[i] / den;
    }
    double tnorm = orthogonalize(basis, ncols, t);
    if (tnorm < 1e-10) {
      t = residual;
      tnorm = orthogonalize(basis, ncols, t);
    }
    if (tnorm < 1e-10) {
      // deterministic fallback direction
      Rng rng(static_cast<std::uint64_t>(iter));
      for (Eigen::Index i = 0; i < n; ++i) t[i] = rng.uniform01() - 0.5;
      tnorm = orthogonalize(basis, ncols, t);
      if (tnorm < 1e-12) break;
    }
    basis.col(ncols) = t / tnorm;
    image.col(ncols) = matvec(m, basis.col(ncols));
    ++ncols;
  }
  throw NumericError("davidson_ground: no convergence after " +
                         std::to_string(opts.max_iter) +
                         " iterations, last residual " +
                         std::to_string(out.residual),
                     out.residual);
}

GroundState dense_ground(const SparseMatrix& m, double e_nuc,
                         int dense_limit) {
  const Eigen::Index n = m.rows();
  if (n < 1) throw ValidationError("dense_ground: empty matrix");
  if (n > dense_limit)
    throw ValidationError("dense_ground: dimension " + std::to_string(n) +
                          " over dense limit " + std::to_string(dense_limit));
  Eigen::MatrixXd dense(m);
  dense = 0.5 * (dense + dense.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  GroundState out;
  out.energy = es.eigenvalues()[0] + e_nuc;
  out.coeffs = es.eigenvectors().col(0);
  canonicalize_sign(out.coeffs);
  out.iterations = 1;
  out.residual = 0.0;
  return out;
}

namespace {

std::pair<double, SubspaceWavefunction> wrap(const ProjectedHamiltonian& ph,
                                             GroundState gs) {
  SubspaceWavefunction psi;
  psi.dets = ph.dets;
  psi.coeffs = std::move(gs.coeffs);
  return {gs.energy, std::move(psi)};
}

}  // namespace

std::pair<double, SubspaceWavefunction> davidson_ground(
    const ProjectedHamiltonian& ph, const DavidsonOptions& opts) {
  return wrap(ph, davidson_ground(ph.matrix, ph.e_nuc, opts));
}

std::pair<double, SubspaceWavefunction> dense_ground(
    const ProjectedHamiltonian& ph, int dense_limit) {
  return wrap(ph, dense_ground(ph.matrix, ph.e_nuc, dense_limit));
}

std::pair<double, SubspaceWavefunction> solve_ground(
    const ProjectedHamiltonian& ph, const DavidsonOptions& opts,
    int dense_limit) {
  if (ph.dim() <= dense_limit) return dense_ground(ph, dense_limit);
  return davidson_ground(ph, opts);
}

}  // namespace qcfe
