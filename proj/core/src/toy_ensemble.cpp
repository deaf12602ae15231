// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/toy_ensemble.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "qcfe/errors.hpp"
#include "qcfe/rng.hpp"

namespace qcfe {

namespace {

double eval_tabulated(const TabulatedPotential& t, double x) {
  const auto& g = t.grid;
  const auto& v = t.values;
  if (g.size() < 2 || g.size() != v.size())
    throw ValidationError("tabulated potential needs >= 2 grid points");
  std::size_t hi = 1;
  if (x >= g.back()) {
    hi = g.size() - 1;
  } else if (x > g.front()) {
    hi = static_cast<std::size_t>(
        std::upper_bound(g.begin(), g.end(), x) - g.begin());
  }
  const double x0 = g[hi - 1], x1 = g[hi];
  const double y0 = v[hi - 1], y1 = v[hi];
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace

double evaluate(const ToyPotential& u, double x) {
  return std::visit(
      [x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HarmonicPotential>) {
          if (!(p.k > 0.0))
            throw ValidationError("harmonic potential requires k > 0");
          const double d = x - p.x0;
          return 0.5 * p.k * d * d;
        } else if constexpr (std::is_same_v<T, QuarticPotential>) {
          return p.a * x * x + p.b * x * x * x * x;
        } else {
          return eval_tabulated(p, x);
        }
      },
      u);
}

MixedPotentialValue mixed_potential(const ToyPotential& u0,
                                    const ToyPotential& u1, double lambda,
                                    double x) {
  if (lambda < 0.0 || lambda > 1.0)
    throw ValidationError("mixed_potential: lambda out of [0, 1]");
  const double e0 = evaluate(u0, x);
  const double e1 = evaluate(u1, x);
  return {(1.0 - lambda) * e0 + lambda * e1, e1 - e0};
}

ChainResult metropolis_chain(const ToyPotential& potential, double beta,
                             int n_samples, const MetropolisOptions& opts,
                             std::uint64_t seed) {
  if (n_samples < 1)
    throw ValidationError("metropolis_chain: n_samples must be >= 1");
  if (!(beta > 0.0))
    throw ValidationError("metropolis_chain: beta must be positive");
  if (!(opts.step_size > 0.0))
    throw ValidationError("metropolis_chain: step_size must be positive");

  Rng rng(seed);
  double x = opts.initial_x;
  if (opts.domain)
    x = std::clamp(x, opts.domain->first, opts.domain->second);
  double energy = evaluate(potential, x);
  double step = opts.step_size;

  auto try_move = [&](double step_now) -> bool {
    const double proposal = x + step_now * (2.0 * rng.uniform01() - 1.0);
    if (opts.domain &&
        (proposal < opts.domain->first || proposal > opts.domain->second))
      return false;  // hard wall: reject, stay
    const double e_new = evaluate(potential, proposal);
    const double de = e_new - energy;
    if (de <= 0.0 || rng.uniform01() < std::exp(-beta * de)) {
      x = proposal;
      energy = e_new;
      return true;
    }
    return false;
  };

  // burn-in with step tuning toward ~40% acceptance
  int accepted_window = 0;
  const int window = 50;
  for (int i = 0; i < opts.burn_in; ++i) {
    if (try_move(step)) ++accepted_window;
    if ((i + 1) % window == 0) {
      const double rate = static_cast<double>(accepted_window) / window;
      step *= rate > 0.4 ? 1.1 : 0.9;
      accepted_window = 0;
    }
  }

  ChainResult out;
  out.samples.reserve(static_cast<std::size_t>(n_samples));
  long accepted = 0;
  for (int i = 0; i < n_samples; ++i) {
    if (try_move(step)) ++accepted;
    out.samples.push_back(x);
  }
  out.acceptance_rate = static_cast<double>(accepted) / n_samples;
  out.step_size = step;
  return out;
}

double harmonic_free_energy(double k, double beta) {
  if (!(k > 0.0) || !(beta > 0.0))
    throw ValidationError("harmonic_free_energy: k and beta must be positive");
  return -std::log(std::sqrt(2.0 * M_PI / (beta * k))) / beta;
}

EnsembleData generate_ensemble(const LambdaSchedule& schedule,
                               const ToyPotential& u0, const ToyPotential& u1,
                               double beta, int samples_per_state,
                               std::uint64_t seed,
                               const MetropolisOptions& opts, int stride) {
  schedule.validate();
  if (samples_per_state < 1)
    throw ValidationError("generate_ensemble: samples_per_state must be >= 1");
  if (stride < 1)
    throw ValidationError("generate_ensemble: stride must be >= 1");

  const auto n_windows = schedule.size();
  EnsembleData data;
  data.schedule = schedule;
  data.coordinates.resize(n_windows);
  data.dudl_means.resize(n_windows);
  data.acceptance_rates.resize(n_windows);

  // windows are independent chains with derived seeds
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t w = 0; w < n_windows; ++w) {
    const double lambda = schedule.lambdas[w];
    const int n_raw = samples_per_state * stride;
    Rng rng(derive_seed(seed, "window", static_cast<std::uint64_t>(w)));
    double x = opts.initial_x;
    if (opts.domain) x = std::clamp(x, opts.domain->first, opts.domain->second);
    double energy = mixed_potential(u0, u1, lambda, x).energy;
    double step = opts.step_size;

    auto try_move = [&]() -> bool {
      const double proposal = x + step * (2.0 * rng.uniform01() - 1.0);
      if (opts.domain &&
          (proposal < opts.domain->first || proposal > opts.domain->second))
        return false;
      const double e_new = mixed_potential(u0, u1, lambda, proposal).energy;
      const double de = e_new - energy;
      if (de <= 0.0 || rng.uniform01() < std::exp(-beta * de)) {
        x = proposal;
        energy = e_new;
        return true;
      }
      return false;
    };

    int accepted_window = 0;
    const int window_len = 50;
    for (int i = 0; i < opts.burn_in; ++i) {
      if (try_move()) ++accepted_window;
      if ((i + 1) % window_len == 0) {
        step *= (static_cast<double>(accepted_window) / window_len) > 0.4
                    ? 1.1
                    : 0.9;
        accepted_window = 0;
      }
    }

    auto& coords = data.coordinates[w];
    coords.reserve(static_cast<std::size_t>(samples_per_state));
    long accepted = 0;
    double dudl_sum = 0.0;
    for (int i = 0; i < n_raw; ++i) {
      if (try_move()) ++accepted;
      if ((i + 1) % stride == 0) {
        coords.push_back(x);
        dudl_sum += mixed_potential(u0, u1, lambda, x).dudl;
      }
    }
    data.dudl_means[w] = dudl_sum / samples_per_state;
    data.acceptance_rates[w] = static_cast<double>(accepted) / n_raw;
  }

  const std::size_t total = n_windows * static_cast<std::size_t>(samples_per_state);
  data.u.beta = beta;
  data.u.counts.assign(n_windows, samples_per_state);
  data.u.u.resize(static_cast<Eigen::Index>(n_windows),
                  static_cast<Eigen::Index>(total));
  std::size_t col = 0;
  for (std::size_t w = 0; w < n_windows; ++w) {
    for (double x : data.coordinates[w]) {
      for (std::size_t k = 0; k < n_windows; ++k)
        data.u.u(static_cast<Eigen::Index>(k),
                 static_cast<Eigen::Index>(col)) =
            beta * mixed_potential(u0, u1, schedule.lambdas[k], x).energy;
      ++col;
    }
  }
  return data;
}

ReducedPotentialMatrix generate_u_kn(const LambdaSchedule& schedule,
                                     const ToyPotential& u0,
                                     const ToyPotential& u1, double beta,
                                     int samples_per_state, std::uint64_t seed,
                                     const MetropolisOptions& opts) {
  return generate_ensemble(schedule, u0, u1, beta, samples_per_state, seed,
                           opts)
      .u;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_sample_archive(const EnsembleData& data, std::ostream& out) {
  const auto k = data.schedule.size();
  out << "state,sample,x";
  for (std::size_t i = 0; i < k; ++i) out << ",u_" << i;
  out << '\n';
  Eigen::Index col = 0;
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t i = 0; i < data.coordinates[w].size(); ++i, ++col) {
      out << w << ',' << i << ',' << format_double(data.coordinates[w][i]);
      for (std::size_t s = 0; s < k; ++s)
        out << ',' << format_double(data.u.u(static_cast<Eigen::Index>(s), col));
      out << '\n';
    }
  }
}

}  // namespace qcfe
