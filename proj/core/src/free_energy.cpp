// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/free_energy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "qcfe/errors.hpp"

namespace qcfe {

void LambdaSchedule::validate() const {
  if (lambdas.empty()) throw ValidationError("LambdaSchedule: empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] < 0.0 || lambdas[i] > 1.0)
      throw ValidationError("LambdaSchedule: lambda out of [0, 1]");
    if (i > 0 && lambdas[i] <= lambdas[i - 1])
      throw ValidationError("LambdaSchedule: lambdas must strictly increase");
  }
  if (!weights.empty() && weights.size() != lambdas.size())
    throw ValidationError("LambdaSchedule: weights/lambdas length mismatch");
}

LambdaSchedule LambdaSchedule::gauss7_tabulated() {
  LambdaSchedule s;
  s.lambdas = {0.025, 0.130, 0.297, 0.500, 0.703, 0.870, 0.975};
  s.weights = {0.065, 0.140, 0.191, 0.209, 0.191, 0.140, 0.065};
  return s;
}

LambdaSchedule LambdaSchedule::gauss_legendre(int n) {
  if (n < 1) throw ValidationError("gauss_legendre: n must be >= 1");
  // Newton iteration on P_n over [-1, 1], then map to [0, 1].
  LambdaSchedule s;
  s.lambdas.resize(n);
  s.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (n == 1) p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pm = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pm) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    s.lambdas[n - 1 - i] = 0.5 * (x + 1.0);
    s.weights[n - 1 - i] = 0.5 * w;
  }
  return s;
}

LambdaSchedule LambdaSchedule::uniform(int n) {
  if (n < 1) throw ValidationError("uniform schedule: n must be >= 1");
  LambdaSchedule s;
  if (n == 1) {
    s.lambdas = {0.0};
    return s;
  }
  for (int i = 0; i < n; ++i)
    s.lambdas.push_back(static_cast<double>(i) / (n - 1));
  return s;
}

double ti_integrate(const LambdaSchedule& schedule,
                    std::span<const double> dudl_means) {
  schedule.validate();
  if (!schedule.has_weights())
    throw ValidationError("ti_integrate: schedule has no quadrature weights");
  if (dudl_means.size() != schedule.size())
    throw ValidationError("ti_integrate: means/schedule length mismatch");
  // Neumaier-compensated sum: the result is the correctly rounded dot
  // product for the short ladders used here.
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < dudl_means.size(); ++i) {
    const double term = schedule.weights[i] * dudl_means[i];
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

void ReducedPotentialMatrix::validate() const {
  const auto k = static_cast<std::size_t>(u.rows());
  if (k == 0 || u.cols() == 0)
    throw ValidationError("ReducedPotentialMatrix: empty");
  if (counts.size() != k)
    throw ValidationError("ReducedPotentialMatrix: counts size mismatch");
  std::int64_t total = 0;
  for (auto c : counts) {
    if (c < 0) throw ValidationError("ReducedPotentialMatrix: negative count");
    total += c;
  }
  if (total != u.cols())
    throw ValidationError(
        "ReducedPotentialMatrix: counts must sum to the sample count");
  if (total == 0)
    throw ValidationError("ReducedPotentialMatrix: no samples");
  if (!u.allFinite())
    throw ValidationError("ReducedPotentialMatrix: non-finite energies");
  if (!(beta > 0.0))
    throw ValidationError("ReducedPotentialMatrix: beta must be positive");
}

FreeEnergyResult mbar_solve(const ReducedPotentialMatrix& input, double tol,
                            int max_iter) {
  input.validate();
  const Eigen::Index k = input.u.rows();
  const Eigen::Index n = input.u.cols();

  std::vector<Eigen::Index> active;
  std::vector<double> log_counts(k, 0.0);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (input.counts[static_cast<std::size_t>(i)] > 0) {
      active.push_back(i);
      log_counts[static_cast<std::size_t>(i)] = std::log(
          static_cast<double>(input.counts[static_cast<std::size_t>(i)]));
    }
  }

  Eigen::VectorXd f = Eigen::VectorXd::Zero(k);  // reduced free energies
  Eigen::VectorXd fnew(k);
  Eigen::VectorXd denom(n);  // log sum_k N_k exp(f_k - u_kn)

  FreeEnergyResult result;
  result.beta = input.beta;
  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < max_iter) {
    ++iter;
    for (Eigen::Index s = 0; s < n; ++s) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i : active)
        mx = std::max(mx, log_counts[static_cast<std::size_t>(i)] + f[i] -
                              input.u(i, s));
      double acc = 0.0;
      for (Eigen::Index i : active)
        acc += std::exp(log_counts[static_cast<std::size_t>(i)] + f[i] -
                        input.u(i, s) - mx);
      denom[s] = mx + std::log(acc);
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index s = 0; s < n; ++s)
        mx = std::max(mx, -input.u(i, s) - denom[s]);
      double acc = 0.0;
      for (Eigen::Index s = 0; s < n; ++s)
        acc += std::exp(-input.u(i, s) - denom[s] - mx);
      fnew[i] = -(mx + std::log(acc));
    }
    fnew.array() -= fnew[0];  // gauge: first state pinned at zero
    residual = (fnew - f).cwiseAbs().maxCoeff();
    f = fnew;
    if (residual < tol) break;
  }
  if (residual >= tol)
    throw NumericError("mbar_solve: no convergence after " +
                           std::to_string(max_iter) +
                           " iterations, last residual " +
                           std::to_string(residual),
                       residual);

  result.diagnostics.iterations = iter;
  result.diagnostics.residual = residual;

  // overlap diagnostic: effective sample size of each state's reweighting
  for (Eigen::Index i = 0; i < k; ++i) {
    double wsum = 0.0, w2sum = 0.0;
    for (Eigen::Index s = 0; s < n; ++s) {
      const double w = std::exp(f[i] - input.u(i, s) - denom[s]);
      wsum += w;
      w2sum += w * w;
    }
    const double ess = wsum * wsum / std::max(w2sum, 1e-300);
    if (ess < 2.0)
      result.diagnostics.warnings.push_back(
          "state " + std::to_string(i) +
          ": negligible overlap with sampled states (ESS " +
          std::to_string(ess) + ")");
  }

  result.free_energies.resize(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i)
    result.free_energies[static_cast<std::size_t>(i)] = f[i] / input.beta;
  return result;
}

double mbar_delta(const FreeEnergyResult& result, int i, int j) {
  const auto k = static_cast<int>(result.free_energies.size());
  if (i < 0 || i >= k || j < 0 || j >= k)
    throw ValidationError("mbar_delta: state index out of range");
  return result.free_energies[static_cast<std::size_t>(j)] -
         result.free_energies[static_cast<std::size_t>(i)];
}

double bookend_combine(double ddg_mm, double corr_complex_a,
                       double corr_complex_b, double corr_water_a,
                       double corr_water_b) {
  return ddg_mm + (corr_complex_b - corr_complex_a) -
         (corr_water_b - corr_water_a);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_csv_double(const std::string& tok, int lineno) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ValidationError("u_kn csv line " + std::to_string(lineno) +
                          ": expected number, got '" + tok + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

ReducedPotentialMatrix read_ukn_csv(std::istream& in, double beta) {
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("u_kn csv: missing header");
  const auto header = split_csv_line(line);
  int state_col = -1;
  std::vector<int> u_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "state") state_col = static_cast<int>(c);
    if (header[c].rfind("u_", 0) == 0) u_cols.push_back(static_cast<int>(c));
  }
  if (state_col < 0)
    throw ValidationError("u_kn csv: header must contain a 'state' column");
  if (u_cols.empty())
    throw ValidationError("u_kn csv: header must contain u_0.. columns");
  // u_k columns must appear in order u_0, u_1, ...
  for (std::size_t k = 0; k < u_cols.size(); ++k)
    if (header[static_cast<std::size_t>(u_cols[k])] !=
        "u_" + std::to_string(k))
      throw ValidationError("u_kn csv: u_* columns must be u_0..u_" +
                            std::to_string(u_cols.size() - 1) + " in order");

  const auto n_states = u_cols.size();
  std::vector<std::vector<double>> rows;
  std::vector<std::int64_t> counts(n_states, 0);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ValidationError("u_kn csv line " + std::to_string(lineno) +
                            ": wrong number of fields");
    const long state = std::lround(
        parse_csv_double(fields[static_cast<std::size_t>(state_col)], lineno));
    if (state < 0 || static_cast<std::size_t>(state) >= n_states)
      throw ValidationError("u_kn csv line " + std::to_string(lineno) +
                            ": state index out of range");
    ++counts[static_cast<std::size_t>(state)];
    std::vector<double> u_row(n_states);
    for (std::size_t k = 0; k < n_states; ++k)
      u_row[k] =
          parse_csv_double(fields[static_cast<std::size_t>(u_cols[k])], lineno);
    rows.push_back(std::move(u_row));
  }
  if (rows.empty()) throw ValidationError("u_kn csv: no samples");

  ReducedPotentialMatrix out;
  out.beta = beta;
  out.counts = std::move(counts);
  out.u.resize(static_cast<Eigen::Index>(n_states),
               static_cast<Eigen::Index>(rows.size()));
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (std::size_t k = 0; k < n_states; ++k)
      out.u(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s)) =
          rows[s][k];
  out.validate();
  return out;
}

ReducedPotentialMatrix read_ukn_csv_file(const std::string& path,
                                         double beta) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open u_kn csv: " + path);
  return read_ukn_csv(in, beta);
}

void write_ukn_csv(const ReducedPotentialMatrix& u, std::ostream& out) {
  u.validate();
  out << "state,sample";
  for (Eigen::Index k = 0; k < u.u.rows(); ++k) out << ",u_" << k;
  out << '\n';
  Eigen::Index sample = 0;
  for (std::size_t state = 0; state < u.counts.size(); ++state) {
    for (std::int64_t i = 0; i < u.counts[state]; ++i, ++sample) {
      out << state << ',' << i;
      for (Eigen::Index k = 0; k < u.u.rows(); ++k)
        out << ',' << format_double(u.u(k, sample));
      out << '\n';
    }
  }
}

nlohmann::json mbar_result_to_json(const FreeEnergyResult& result) {
  nlohmann::json j;
  j["free_energies"] = result.free_energies;
  j["beta"] = result.beta;
  j["gauge"] = "first state fixed at zero";
  j["iterations"] = result.diagnostics.iterations;
  j["residual"] = result.diagnostics.residual;
  j["warnings"] = result.diagnostics.warnings;
  const auto k = result.free_energies.size();
  nlohmann::json deltas = nlohmann::json::array();
  for (std::size_t i = 0; i + 1 < k; ++i)
    deltas.push_back(result.free_energies[i + 1] - result.free_energies[i]);
  j["adjacent_deltas"] = std::move(deltas);
  if (k >= 1)
    j["end_to_end_delta"] =
        result.free_energies[k - 1] - result.free_energies[0];
  return j;
}

}  // namespace qcfe
