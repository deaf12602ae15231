// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "qcfe/eigensolver.hpp"
#include "qcfe/sample_set.hpp"

namespace qcfe {

struct SqdConfig {
  int n_batches = 10;
  int batch_size = 1000;        // draws per batch, de-duplicated afterwards
  int score_iterations = 2;     // recovery rounds after the initial round
  double davidson_tol = 1e-8;
  std::uint64_t seed = 0;
  double ext_cutoff = 1e-5;     // amplitude screen for the extension stage
  double flip_weight_exponent = 1.0;  // w(t) = t^exponent in recovery
  int dense_limit = 128;        // dense diagonalization below, Davidson above
  int davidson_max_iter = 1000;

  void validate() const;
};

struct PartitionedSamples {
  SampleSet valid;    // per-spin popcounts match the electron counts
  SampleSet invalid;  // everything else; total shots are preserved
};

PartitionedSamples partition_by_particle_number(const SampleSet& samples,
                                                int n_alpha, int n_beta);

/// Occupancies of a raw sample multiset (shot-weighted bit frequencies).
OccupancyVector sample_occupancies(const SampleSet& samples);

struct RecoveryStats {
  std::uint64_t uniform_fallbacks = 0;  // sectors repaired with flat weights
};

/// Configuration recovery: per spin sector, clear surplus (or set missing)
/// bits one at a time without replacement, each candidate weighted by
/// w(|x - n|) = |x - n|^exponent against the average occupancy vector n.
/// Every output string satisfies the particle-number constraint.
SampleSet score_recover(const SampleSet& invalid, const OccupancyVector& n,
                        int n_alpha, int n_beta, std::uint64_t seed,
                        double weight_exponent = 1.0,
                        RecoveryStats* stats = nullptr);

/// K batches of `batch_size` draws with replacement by empirical frequency,
/// de-duplicated into determinant sets. Per-batch derived seeds keep the
/// result independent of scheduling.
std::vector<std::vector<Determinant>> draw_batches(const SampleSet& pool,
                                                   int n_batches,
                                                   int batch_size,
                                                   std::uint64_t seed);

struct SqdResult {
  double energy = 0.0;
  SubspaceWavefunction wavefunction;  // best across all rounds and batches
  std::size_t subspace_dim = 0;       // D of the best batch
  std::vector<std::vector<double>> batch_energies;  // [round][batch]
  std::vector<OccupancyVector> occupancy_history;   // raw, then per round
  std::uint64_t valid_shots = 0;
  std::uint64_t invalid_shots = 0;
  int rounds_run = 0;
  bool early_stopped = false;
  std::uint64_t recovery_uniform_fallbacks = 0;
};

/// Self-consistent sample-based diagonalization. Round 0 diagonalizes
/// batches drawn from the valid shots only; each subsequent round repairs
/// the invalid shots with the current occupancies (initially those of the
/// raw valid samples), pools, re-draws and re-diagonalizes. Stops after
/// `score_iterations` recovery rounds or once successive min-energies agree
/// within 1e-8 Hartree. Returns the lowest energy ever seen.
SqdResult sqd_run(const MolecularHamiltonian& h, const SampleSet& raw_samples,
                  const SqdConfig& config);

struct ExtendedSubspace {
  std::vector<Determinant> base;       // S
  std::vector<Determinant> extension;  // S_E \ S
  std::size_t total() const { return base.size() + extension.size(); }
};

struct ExtSqdResult {
  ExtendedSubspace subspace;
  double energy = 0.0;
  SubspaceWavefunction wavefunction;
  bool bound_exceeded = false;  // diagnostic against dimension_bound + D
};

/// Extend the converged subspace with all single excitations of source
/// determinants whose |c_k| >= cutoff, then diagonalize over the union.
/// Variational by construction: energy <= the input subspace energy.
ExtSqdResult extsqd_extend(const MolecularHamiltonian& h,
                           const SubspaceWavefunction& psi0, double cutoff,
                           const SqdConfig& config = {});

/// D * n_alpha (M - n_alpha) * n_beta (M - n_beta).
std::uint64_t dimension_bound(std::uint64_t d, int n_orbitals, int n_alpha,
                              int n_beta);

nlohmann::json sqd_result_to_json(const SqdResult& result, int n_orbitals);
nlohmann::json extsqd_result_to_json(const ExtSqdResult& result,
                                     const MolecularHamiltonian& h);

}  // namespace qcfe
