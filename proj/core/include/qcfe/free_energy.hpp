// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace qcfe {

/// Coupling-parameter ladder. Weights (quadrature coefficients) are present
/// for thermodynamic integration and absent for estimator-only ladders.
struct LambdaSchedule {
  std::vector<double> lambdas;
  std::vector<double> weights;  // empty when absent

  bool has_weights() const noexcept { return !weights.empty(); }
  std::size_t size() const noexcept { return lambdas.size(); }
  void validate() const;

  /// The seven-window ladder with three-decimal tabulated coefficients
  /// {0.065, 0.140, 0.191, 0.209, 0.191, 0.140, 0.065} at nodes
  /// {0.025, 0.130, 0.297, 0.500, 0.703, 0.870, 0.975}.
  static LambdaSchedule gauss7_tabulated();

  /// Full-precision Gauss-Legendre nodes/weights mapped to [0, 1].
  static LambdaSchedule gauss_legendre(int n);

  /// n evenly spaced windows from 0 to 1 inclusive, no weights.
  static LambdaSchedule uniform(int n);
};

/// Weighted sum of per-window <dU/dlambda> means (compensated summation).
double ti_integrate(const LambdaSchedule& schedule,
                    std::span<const double> dudl_means);

/// Dimensionless reduced energies of all pooled samples under every state:
/// u(k, n) = beta * U_k(x_n), with per-state sample counts.
struct ReducedPotentialMatrix {
  Eigen::MatrixXd u;  // K x N
  std::vector<std::int64_t> counts;
  double beta = 1.0;

  void validate() const;
};

struct MbarDiagnostics {
  int iterations = 0;
  double residual = 0.0;
  std::vector<std::string> warnings;
};

/// Per-state free energies in energy units, gauge-fixed so the first state
/// is exactly zero.
struct FreeEnergyResult {
  std::vector<double> free_energies;
  double beta = 1.0;
  MbarDiagnostics diagnostics;
};

/// Self-consistent multistate reweighting: iterate the fixed-point map from
/// zero with log-sum-exp evaluation until the largest per-state change (in
/// reduced units) falls below tol. Poor-overlap states are reported as
/// warnings, not errors.
FreeEnergyResult mbar_solve(const ReducedPotentialMatrix& input,
                            double tol = 1e-10, int max_iter = 100000);

/// A_j - A_i.
double mbar_delta(const FreeEnergyResult& result, int i, int j);

/// Thermodynamic-cycle closure: the MM relative free energy plus the
/// difference of end-state corrections in the complex leg minus the same
/// difference in the water leg.
double bookend_combine(double ddg_mm, double corr_complex_a,
                       double corr_complex_b, double corr_water_a,
                       double corr_water_b);

/// CSV with header `state,sample,u_0,...,u_{K-1}`; extra columns (such as a
/// coordinate column) are ignored. Counts are tallied from the state column.
ReducedPotentialMatrix read_ukn_csv(std::istream& in, double beta);
ReducedPotentialMatrix read_ukn_csv_file(const std::string& path, double beta);

/// Writer assumes (and emits) samples grouped by originating state, which is
/// how the ensemble generator pools them. The estimator itself only uses
/// per-state totals, so sample order never affects results.
void write_ukn_csv(const ReducedPotentialMatrix& u, std::ostream& out);

nlohmann::json mbar_result_to_json(const FreeEnergyResult& result);

}  // namespace qcfe
