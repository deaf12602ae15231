// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/sqd.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qcfe/errors.hpp"
#include "qcfe/rng.hpp"

namespace qcfe {

void SqdConfig::validate() const {
  if (n_batches < 1) throw ValidationError("SqdConfig: n_batches must be >= 1");
  if (batch_size < 1) throw ValidationError("SqdConfig: batch_size must be >= 1");
  if (score_iterations < 0)
    throw ValidationError("SqdConfig: score_iterations must be >= 0");
  if (!(davidson_tol > 0.0))
    throw ValidationError("SqdConfig: davidson_tol must be positive");
  if (flip_weight_exponent < 0.0)
    throw ValidationError("SqdConfig: flip_weight_exponent must be >= 0");
}

PartitionedSamples partition_by_particle_number(const SampleSet& samples,
                                                int n_alpha, int n_beta) {
  PartitionedSamples out{SampleSet(samples.n_orbitals()),
                         SampleSet(samples.n_orbitals())};
  for (const auto& [pattern, count] : samples.counts()) {
    if (n_alpha_of(pattern) == n_alpha && n_beta_of(pattern) == n_beta)
      out.valid.add(pattern, count);
    else
      out.invalid.add(pattern, count);
  }
  return out;
}

OccupancyVector sample_occupancies(const SampleSet& samples) {
  const int m = samples.n_orbitals();
  OccupancyVector n(2 * static_cast<std::size_t>(m), 0.0);
  if (samples.empty()) return n;
  for (const auto& [pattern, count] : samples.counts()) {
    const double w = static_cast<double>(count);
    std::uint64_t a = pattern.alpha;
    while (a) {
      n[std::countr_zero(a)] += w;
      a &= a - 1;
    }
    std::uint64_t b = pattern.beta;
    while (b) {
      n[m + std::countr_zero(b)] += w;
      b &= b - 1;
    }
  }
  const double total = static_cast<double>(samples.total_shots());
  for (double& x : n) x /= total;
  return n;
}

namespace {

// Repair one spin sector of one shot: flip exactly |popcount - target| bits,
// candidates drawn without replacement with weight w(|x - n|).
std::uint64_t repair_sector(std::uint64_t mask, int m, int target,
                            const double* occupancy, double exponent, Rng& rng,
                            std::uint64_t& uniform_fallbacks) {
  int have = std::popcount(mask);
  while (have != target) {
    const bool surplus = have > target;
    // candidates: occupied bits when clearing, empty bits when setting
    std::vector<int> cand;
    std::vector<double> weight;
    cand.reserve(m);
    weight.reserve(m);
    for (int p = 0; p < m; ++p) {
      const bool occ = (mask >> p) & 1;
      if (occ != surplus) continue;
      const double x = occ ? 1.0 : 0.0;
      cand.push_back(p);
      weight.push_back(std::pow(std::abs(x - occupancy[p]), exponent));
    }
    double total = 0.0;
    for (double w : weight) total += w;
    if (!(total > 0.0)) {
      ++uniform_fallbacks;
      std::fill(weight.begin(), weight.end(), 1.0);
      total = static_cast<double>(weight.size());
    }
    std::vector<double> cdf(weight.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weight.size(); ++i) {
      acc += weight[i];
      cdf[i] = acc;
    }
    const int p = cand[rng.categorical_cdf(cdf)];
    mask ^= 1ull << p;
    have += surplus ? -1 : 1;
  }
  return mask;
}

}  // namespace

SampleSet score_recover(const SampleSet& invalid, const OccupancyVector& n,
                        int n_alpha, int n_beta, std::uint64_t seed,
                        double weight_exponent, RecoveryStats* stats) {
  const int m = invalid.n_orbitals();
  if (n.size() != 2 * static_cast<std::size_t>(m))
    throw ValidationError("score_recover: occupancy vector must have 2M entries");
  for (double x : n)
    if (!(x >= 0.0 && x <= 1.0))
      throw ValidationError("score_recover: occupancies must lie in [0, 1]");

  SampleSet out(m);
  Rng rng(seed);
  std::uint64_t fallbacks = 0;
  for (const auto& [pattern, count] : invalid.counts()) {
    for (std::uint64_t shot = 0; shot < count; ++shot) {
      Determinant fixed = pattern;
      fixed.alpha = repair_sector(fixed.alpha, m, n_alpha, n.data(),
                                  weight_exponent, rng, fallbacks);
      fixed.beta = repair_sector(fixed.beta, m, n_beta, n.data() + m,
                                 weight_exponent, rng, fallbacks);
      out.add(fixed);
    }
  }
  if (stats) stats->uniform_fallbacks += fallbacks;
  return out;
}

std::vector<std::vector<Determinant>> draw_batches(const SampleSet& pool,
                                                   int n_batches,
                                                   int batch_size,
                                                   std::uint64_t seed) {
  if (pool.empty()) throw ValidationError("draw_batches: empty pool");
  if (n_batches < 1 || batch_size < 1)
    throw ValidationError("draw_batches: n_batches and batch_size must be >= 1");

  std::vector<Determinant> keys;
  std::vector<double> cdf;
  keys.reserve(pool.distinct());
  cdf.reserve(pool.distinct());
  double acc = 0.0;
  for (const auto& [pattern, count] : pool.counts()) {
    keys.push_back(pattern);
    acc += static_cast<double>(count);
    cdf.push_back(acc);
  }

  std::vector<std::vector<Determinant>> batches(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    Rng rng(derive_seed(seed, "batch", static_cast<std::uint64_t>(b)));
    std::set<Determinant> chosen;
    for (int d = 0; d < batch_size; ++d)
      chosen.insert(keys[rng.categorical_cdf(cdf)]);
    batches[b].assign(chosen.begin(), chosen.end());
  }
  return batches;
}

namespace {

struct BatchSolve {
  double energy;
  SubspaceWavefunction psi;
};

std::vector<BatchSolve> solve_batches(
    const MolecularHamiltonian& h,
    const std::vector<std::vector<Determinant>>& batches,
    const SqdConfig& config) {
  std::vector<BatchSolve> out(batches.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t b = 0; b < batches.size(); ++b) {
    try {
      const auto ph = build_subspace_matrix(h, batches[b]);
      DavidsonOptions opts;
      opts.tol = config.davidson_tol;
      opts.max_iter = config.davidson_max_iter;
      auto [energy, psi] = solve_ground(ph, opts, config.dense_limit);
      out[b] = {energy, std::move(psi)};
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

OccupancyVector average_occupancies(const std::vector<BatchSolve>& solves,
                                    int m) {
  OccupancyVector avg(2 * static_cast<std::size_t>(m), 0.0);
  for (const auto& s : solves) {
    const auto n = occupancies(s.psi, m);
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += n[i];
  }
  for (double& x : avg) x /= static_cast<double>(solves.size());
  return avg;
}

}  // namespace

SqdResult sqd_run(const MolecularHamiltonian& h, const SampleSet& raw_samples,
                  const SqdConfig& config) {
  config.validate();
  if (raw_samples.empty()) throw ValidationError("sqd_run: no samples");
  if (raw_samples.n_orbitals() != h.n_orbitals())
    throw ValidationError("sqd_run: sample/Hamiltonian orbital count mismatch");

  const int m = h.n_orbitals();
  auto parts = partition_by_particle_number(raw_samples, h.n_alpha(),
                                            h.n_beta());
  SqdResult result;
  result.valid_shots = parts.valid.total_shots();
  result.invalid_shots = parts.invalid.total_shots();

  if (parts.valid.empty() && config.score_iterations == 0)
    throw ValidationError(
        "sqd_run: empty subspace (all shots invalid and recovery disabled)");

  // initial occupancy guess from the raw valid samples; uninformative when
  // none survived the filter
  OccupancyVector n = parts.valid.empty()
                          ? OccupancyVector(2 * static_cast<std::size_t>(m), 0.5)
                          : sample_occupancies(parts.valid);
  result.occupancy_history.push_back(n);

  RecoveryStats recovery_stats;
  bool have_best = false;
  bool have_previous = false;
  double previous_min = 0.0;

  const int total_rounds = config.score_iterations + 1;
  for (int round = 0; round < total_rounds; ++round) {
    SampleSet pool = parts.valid;
    if (round > 0 && !parts.invalid.empty()) {
      const auto recovered = score_recover(
          parts.invalid, n, h.n_alpha(), h.n_beta(),
          derive_seed(config.seed, "recover", static_cast<std::uint64_t>(round)),
          config.flip_weight_exponent, &recovery_stats);
      pool.merge(recovered);
    }
    if (pool.empty()) continue;  // possible only in round 0

    const auto batches = draw_batches(
        pool, config.n_batches, config.batch_size,
        derive_seed(config.seed, "round", static_cast<std::uint64_t>(round)));
    const auto solves = solve_batches(h, batches, config);

    std::vector<double> energies(solves.size());
    std::size_t best_b = 0;
    for (std::size_t b = 0; b < solves.size(); ++b) {
      energies[b] = solves[b].energy;
      if (solves[b].energy < energies[best_b]) best_b = b;
    }
    result.batch_energies.push_back(energies);
    const double round_min = energies[best_b];

    if (!have_best || round_min < result.energy) {
      result.energy = round_min;
      result.wavefunction = solves[best_b].psi;
      result.subspace_dim = solves[best_b].psi.size();
      have_best = true;
    }

    n = average_occupancies(solves, m);
    result.occupancy_history.push_back(n);
    result.rounds_run = round + 1;

    if (have_previous && std::abs(round_min - previous_min) < 1e-8) {
      result.early_stopped = true;
      break;
    }
    previous_min = round_min;
    have_previous = true;
  }

  if (!have_best)
    throw ValidationError("sqd_run: no batch could be diagonalized");
  result.recovery_uniform_fallbacks = recovery_stats.uniform_fallbacks;
  return result;
}

std::uint64_t dimension_bound(std::uint64_t d, int n_orbitals, int n_alpha,
                              int n_beta) {
  const std::uint64_t a =
      static_cast<std::uint64_t>(n_alpha) *
      static_cast<std::uint64_t>(n_orbitals - n_alpha);
  const std::uint64_t b =
      static_cast<std::uint64_t>(n_beta) *
      static_cast<std::uint64_t>(n_orbitals - n_beta);
  return d * a * b;
}

ExtSqdResult extsqd_extend(const MolecularHamiltonian& h,
                           const SubspaceWavefunction& psi0, double cutoff,
                           const SqdConfig& config) {
  validate_wavefunction(psi0);
  const int m = h.n_orbitals();

  std::set<Determinant> base(psi0.dets.begin(), psi0.dets.end());
  std::set<Determinant> extension;
  for (std::size_t k = 0; k < psi0.dets.size(); ++k) {
    if (std::abs(psi0.coeffs[static_cast<Eigen::Index>(k)]) < cutoff) continue;
    for (const auto& single : enumerate_singles(psi0.dets[k], m))
      if (!base.contains(single.det)) extension.insert(single.det);
  }

  ExtSqdResult result;
  result.subspace.base.assign(base.begin(), base.end());
  result.subspace.extension.assign(extension.begin(), extension.end());

  std::vector<Determinant> all;
  all.reserve(result.subspace.total());
  std::merge(base.begin(), base.end(), extension.begin(), extension.end(),
             std::back_inserter(all));

  const auto ph = build_subspace_matrix(h, all);
  DavidsonOptions opts;
  opts.tol = config.davidson_tol;
  opts.max_iter = config.davidson_max_iter;
  auto [energy, psi] = solve_ground(ph, opts, config.dense_limit);
  result.energy = energy;
  result.wavefunction = std::move(psi);
  result.bound_exceeded =
      result.subspace.total() >
      dimension_bound(psi0.dets.size(), m, h.n_alpha(), h.n_beta()) +
          psi0.dets.size();
  return result;
}

nlohmann::json sqd_result_to_json(const SqdResult& result, int n_orbitals) {
  nlohmann::json j;
  j["energy"] = result.energy;
  j["subspace_dim"] = result.subspace_dim;
  j["batch_energies"] = result.batch_energies;
  j["occupancy_history"] = result.occupancy_history;
  j["valid_shots"] = result.valid_shots;
  j["invalid_shots"] = result.invalid_shots;
  j["rounds_run"] = result.rounds_run;
  j["early_stopped"] = result.early_stopped;
  j["recovery_uniform_fallbacks"] = result.recovery_uniform_fallbacks;
  nlohmann::json wf;
  wf["dets"] = nlohmann::json::array();
  wf["coeffs"] = nlohmann::json::array();
  for (std::size_t k = 0; k < result.wavefunction.dets.size(); ++k) {
    wf["dets"].push_back(to_bitstring(result.wavefunction.dets[k], n_orbitals));
    wf["coeffs"].push_back(
        result.wavefunction.coeffs[static_cast<Eigen::Index>(k)]);
  }
  j["wavefunction"] = std::move(wf);
  return j;
}

nlohmann::json extsqd_result_to_json(const ExtSqdResult& result,
                                     const MolecularHamiltonian& h) {
  nlohmann::json j;
  j["energy"] = result.energy;
  j["d"] = result.subspace.base.size();
  j["d_e"] = result.subspace.total();
  j["dimension_bound"] = dimension_bound(result.subspace.base.size(),
                                         h.n_orbitals(), h.n_alpha(),
                                         h.n_beta());
  j["bound_exceeded"] = result.bound_exceeded;
  return j;
}

}  // namespace qcfe
