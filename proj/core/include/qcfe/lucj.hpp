// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "qcfe/determinant.hpp"
#include "qcfe/sample_set.hpp"

namespace qcfe {

/// One repetition of the ansatz: a real antisymmetric one-body generator K
/// (orbital rotation, applied identically to both spin sectors) and a real
/// symmetric density-density coupling J (radians of phase per occupied
/// pair).
struct LucjRepetition {
  Eigen::MatrixXd orbital_generator;  // K, K^T = -K
  Eigen::MatrixXd coupling;           // J, J^T = J
};

struct LucjParameters {
  int n_orbitals = 0;
  std::vector<LucjRepetition> reps;
  Eigen::MatrixXd final_orbital_generator;  // K2, applied once after all reps
  Determinant reference;                    // closed-shell reference state

  /// Antisymmetry/symmetry within 1e-12 and shape checks.
  void validate() const;
};

/// Zero masked-out couplings: any off-diagonal J_pq whose unordered spatial
/// pair is absent from `retained` is set to zero (diagonal pairs [p,p] gate
/// the on-site alpha-beta term).
void apply_coupling_mask(
    LucjParameters& params,
    const std::vector<std::pair<int, int>>& retained);

/// Seeded random parameters: entries drawn from a normal distribution scaled
/// by `magnitude`, then (anti)symmetrized. Reference defaults to the aufbau
/// determinant of (n_alpha, n_beta).
LucjParameters random_lucj_parameters(int n_orbitals, int n_alpha, int n_beta,
                                      int reps, double magnitude,
                                      std::uint64_t seed);

LucjParameters lucj_parameters_from_json(const nlohmann::json& j, int n_alpha,
                                         int n_beta);
nlohmann::json lucj_parameters_to_json(const LucjParameters& params);
LucjParameters load_lucj_parameters(const std::string& path, int n_alpha,
                                    int n_beta);

/// Full 2^(2M) complex statevector, basis index bit s = occupation of
/// spin-orbital s in the canonical alpha-then-beta order.
class StateVector {
 public:
  explicit StateVector(int n_orbitals);

  int n_orbitals() const noexcept { return n_orbitals_; }
  std::size_t dim() const noexcept { return amps_.size(); }
  std::complex<double>& operator[](std::size_t i) { return amps_[i]; }
  const std::complex<double>& operator[](std::size_t i) const {
    return amps_[i];
  }
  double norm() const;

 private:
  int n_orbitals_;
  std::vector<std::complex<double>> amps_;
};

/// Prepare the ansatz state by exact statevector simulation: per repetition
/// exp(-K1), the diagonal phase exp(i J1), exp(+K1); then exp(-K2) once.
/// Orbital rotations are realized as sequences of two-mode Givens rotations
/// from a decomposition of the M x M orthogonal exp(-K). Norm and per-spin
/// particle number are preserved exactly. Requires M <= 8.
StateVector lucj_prepare(const LucjParameters& params);

/// `shots` independent Born-rule draws; deterministic per seed.
SampleSet born_sample(const StateVector& state, std::uint64_t shots,
                      std::uint64_t seed);

/// i.i.d. bit-flip channel with probability p per bit per shot.
SampleSet bitflip_noise(const SampleSet& samples, double p,
                        std::uint64_t seed);

/// Noiseless oracle sampler: draws from the squared coefficients of the
/// dense FCI ground state of H.
SampleSet exact_state_sample(const MolecularHamiltonian& h,
                             std::uint64_t shots, std::uint64_t seed,
                             int dense_limit = 4096);

}  // namespace qcfe
