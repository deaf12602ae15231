// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "qcfe/free_energy.hpp"

namespace qcfe {

// 1-D analytic surrogates for the sampled legs: every estimator property
// exercised here (window overlap, quadrature accuracy, self-consistency) is
// dimension-independent, and one dimension admits closed-form oracles.

struct HarmonicPotential {
  double k;   // force constant, k > 0
  double x0;  // center
};

struct QuarticPotential {
  double a;  // U = a x^2 + b x^4
  double b;
};

struct TabulatedPotential {
  std::vector<double> grid;    // strictly increasing
  std::vector<double> values;  // same length; linear interpolation,
                               // edge-slope extrapolation outside
};

using ToyPotential =
    std::variant<HarmonicPotential, QuarticPotential, TabulatedPotential>;

double evaluate(const ToyPotential& u, double x);

struct MixedPotentialValue {
  double energy;  // (1 - lambda) U0 + lambda U1
  double dudl;    // U1 - U0, independent of lambda
};

MixedPotentialValue mixed_potential(const ToyPotential& u0,
                                    const ToyPotential& u1, double lambda,
                                    double x);

struct MetropolisOptions {
  double step_size = 0.5;  // initial; tuned toward 40% acceptance in burn-in
  int burn_in = 1000;
  double initial_x = 0.0;
  std::optional<std::pair<double, double>> domain;  // hard walls when set
};

struct ChainResult {
  std::vector<double> samples;
  double acceptance_rate;  // over the production phase
  double step_size;        // after tuning
};

/// Symmetric-proposal Metropolis chain; deterministic per seed.
ChainResult metropolis_chain(const ToyPotential& potential, double beta,
                             int n_samples, const MetropolisOptions& opts,
                             std::uint64_t seed);

/// Configurational free energy of U = k/2 (x - x0)^2:
/// A = -(1/beta) ln sqrt(2 pi / (beta k)).
double harmonic_free_energy(double k, double beta);

/// One chain per window on the mixed potential, pooled reduced energies
/// under every state, per-window <dU/dlambda> means and coordinates.
struct EnsembleData {
  LambdaSchedule schedule;
  std::vector<std::vector<double>> coordinates;  // [window][sample]
  ReducedPotentialMatrix u;                      // pooled, K x N
  std::vector<double> dudl_means;                // per window
  std::vector<double> acceptance_rates;          // per window
};

/// `stride` keeps every stride-th production sample, mirroring periodic
/// solver dispatch along a trajectory.
EnsembleData generate_ensemble(const LambdaSchedule& schedule,
                               const ToyPotential& u0, const ToyPotential& u1,
                               double beta, int samples_per_state,
                               std::uint64_t seed,
                               const MetropolisOptions& opts = {},
                               int stride = 1);

ReducedPotentialMatrix generate_u_kn(const LambdaSchedule& schedule,
                                     const ToyPotential& u0,
                                     const ToyPotential& u1, double beta,
                                     int samples_per_state, std::uint64_t seed,
                                     const MetropolisOptions& opts = {});

/// CSV archive: `state,sample,x,u_0,...,u_{K-1}` (consumable by the u_kn
/// reader, which ignores the coordinate column).
void write_sample_archive(const EnsembleData& data, std::ostream& out);

}  // namespace qcfe
