// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/lucj.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>

#include "qcfe/eigensolver.hpp"
#include "qcfe/errors.hpp"
#include "qcfe/rng.hpp"

namespace qcfe {

namespace {

constexpr double kSymTol = 1e-12;

void check_antisymmetric(const Eigen::MatrixXd& k, int m, const char* name) {
  if (k.rows() != m || k.cols() != m)
    throw ValidationError(std::string(name) + ": wrong shape");
  if ((k + k.transpose()).cwiseAbs().maxCoeff() > kSymTol)
    throw ValidationError(std::string(name) + ": not antisymmetric");
}

void check_symmetric(const Eigen::MatrixXd& j, int m, const char* name) {
  if (j.rows() != m || j.cols() != m)
    throw ValidationError(std::string(name) + ": wrong shape");
  if ((j - j.transpose()).cwiseAbs().maxCoeff() > kSymTol)
    throw ValidationError(std::string(name) + ": not symmetric");
}

}  // namespace

void LucjParameters::validate() const {
  if (n_orbitals < 1 || n_orbitals > 64)
    throw ValidationError("LucjParameters: n_orbitals out of [1, 64]");
  for (const auto& rep : reps) {
    check_antisymmetric(rep.orbital_generator, n_orbitals, "K");
    check_symmetric(rep.coupling, n_orbitals, "J");
  }
  check_antisymmetric(final_orbital_generator, n_orbitals, "K2");
  const std::uint64_t range =
      n_orbitals >= 64 ? ~0ull : ((1ull << n_orbitals) - 1);
  if ((reference.alpha & ~range) || (reference.beta & ~range))
    throw ValidationError("LucjParameters: reference bits exceed orbitals");
}

void apply_coupling_mask(LucjParameters& params,
                         const std::vector<std::pair<int, int>>& retained) {
  const int m = params.n_orbitals;
  Eigen::MatrixXd keep = Eigen::MatrixXd::Zero(m, m);
  for (auto [p, q] : retained) {
    if (p < 0 || p >= m || q < 0 || q >= m)
      throw ValidationError("coupling mask index out of range");
    keep(p, q) = keep(q, p) = 1.0;
  }
  for (auto& rep : params.reps)
    rep.coupling = rep.coupling.cwiseProduct(keep);
}

LucjParameters random_lucj_parameters(int n_orbitals, int n_alpha, int n_beta,
                                      int reps, double magnitude,
                                      std::uint64_t seed) {
  if (reps < 1) throw ValidationError("random_lucj_parameters: reps < 1");
  Rng rng(seed);
  auto draw = [&](Eigen::MatrixXd& out) {
    out.resize(n_orbitals, n_orbitals);
    for (int r = 0; r < n_orbitals; ++r)
      for (int c = 0; c < n_orbitals; ++c) out(r, c) = rng.normal();
  };
  LucjParameters params;
  params.n_orbitals = n_orbitals;
  Eigen::MatrixXd g(n_orbitals, n_orbitals);
  for (int r = 0; r < reps; ++r) {
    LucjRepetition rep;
    draw(g);
    rep.orbital_generator = 0.5 * magnitude * (g - g.transpose());
    draw(g);
    rep.coupling = 0.5 * magnitude * (g + g.transpose());
    params.reps.push_back(std::move(rep));
  }
  draw(g);
  params.final_orbital_generator = 0.5 * magnitude * (g - g.transpose());
  params.reference = {n_alpha >= 64 ? ~0ull : (1ull << n_alpha) - 1,
                      n_beta >= 64 ? ~0ull : (1ull << n_beta) - 1};
  params.validate();
  return params;
}

namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int m,
                                 const char* what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(m) * m)
    throw ValidationError(std::string("lucj parameters: '") + what +
                          "' must be a row-major array of " +
                          std::to_string(m * m) + " numbers");
  Eigen::MatrixXd out(m, m);
  std::size_t idx = 0;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      if (!j[idx].is_number())
        throw ValidationError(std::string("lucj parameters: '") + what +
                              "' contains a non-number");
      out(r, c) = j[idx].get<double>();
      ++idx;
    }
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& mat) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < mat.rows(); ++r)
    for (Eigen::Index c = 0; c < mat.cols(); ++c) out.push_back(mat(r, c));
  return out;
}

}  // namespace

LucjParameters lucj_parameters_from_json(const nlohmann::json& j, int n_alpha,
                                         int n_beta) {
  if (!j.is_object()) throw ValidationError("lucj parameters: not an object");
  if (!j.contains("norb") || !j["norb"].is_number_integer())
    throw ValidationError("lucj parameters: missing integer 'norb'");
  const int m = j["norb"].get<int>();
  int reps = 1;
  if (j.contains("reps")) reps = j["reps"].get<int>();
  if (reps < 1) throw ValidationError("lucj parameters: reps < 1");

  auto block_list = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array() ||
        j[key].size() != static_cast<std::size_t>(reps))
      throw ValidationError(std::string("lucj parameters: '") + key +
                            "' must list one block per repetition");
    return j[key];
  };

  LucjParameters params;
  params.n_orbitals = m;
  const auto ks = block_list("k");
  const auto js = block_list("j");
  for (int r = 0; r < reps; ++r) {
    LucjRepetition rep;
    rep.orbital_generator = matrix_from_json(ks[r], m, "k");
    rep.coupling = matrix_from_json(js[r], m, "j");
    params.reps.push_back(std::move(rep));
  }
  if (j.contains("k2") && !j["k2"].is_null())
    params.final_orbital_generator = matrix_from_json(j["k2"], m, "k2");
  else
    params.final_orbital_generator = Eigen::MatrixXd::Zero(m, m);

  if (j.contains("reference") && !j["reference"].is_null()) {
    params.reference =
        determinant_from_bitstring(j["reference"].get<std::string>());
  } else {
    params.reference = {n_alpha >= 64 ? ~0ull : (1ull << n_alpha) - 1,
                        n_beta >= 64 ? ~0ull : (1ull << n_beta) - 1};
  }
  params.validate();

  if (j.contains("j_mask") && !j["j_mask"].is_null()) {
    std::vector<std::pair<int, int>> retained;
    for (const auto& pair : j["j_mask"]) {
      if (!pair.is_array() || pair.size() != 2)
        throw ValidationError("lucj parameters: j_mask entries are [p, q]");
      retained.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
    apply_coupling_mask(params, retained);
  }
  return params;
}

nlohmann::json lucj_parameters_to_json(const LucjParameters& params) {
  nlohmann::json out;
  out["norb"] = params.n_orbitals;
  out["reps"] = params.reps.size();
  out["k"] = nlohmann::json::array();
  out["j"] = nlohmann::json::array();
  for (const auto& rep : params.reps) {
    out["k"].push_back(matrix_to_json(rep.orbital_generator));
    out["j"].push_back(matrix_to_json(rep.coupling));
  }
  out["k2"] = matrix_to_json(params.final_orbital_generator);
  out["reference"] = to_bitstring(params.reference, params.n_orbitals);
  return out;
}

LucjParameters load_lucj_parameters(const std::string& path, int n_alpha,
                                    int n_beta) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lucj parameter file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("lucj parameter file " + path + ": " + e.what());
  }
  return lucj_parameters_from_json(j, n_alpha, n_beta);
}

StateVector::StateVector(int n_orbitals) : n_orbitals_(n_orbitals) {
  if (n_orbitals_ < 1 || n_orbitals_ > 8)
    throw ValidationError("StateVector: n_orbitals out of [1, 8]");
  amps_.assign(std::size_t{1} << (2 * n_orbitals_), {0.0, 0.0});
}

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

namespace {

// exp of a real antisymmetric matrix via the Hermitian eigendecomposition of
// i*K; the result is real orthogonal with determinant +1.
Eigen::MatrixXd exp_antisymmetric(const Eigen::MatrixXd& k) {
  const Eigen::MatrixXcd ik =
      std::complex<double>(0.0, 1.0) * k.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ik);
  const Eigen::VectorXd w = es.eigenvalues();
  Eigen::VectorXcd phases(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    phases[i] = std::exp(std::complex<double>(0.0, -w[i]));
  const Eigen::MatrixXcd q = es.eigenvectors() * phases.asDiagonal() *
                             es.eigenvectors().adjoint();
  return q.real();
}

struct GivensStep {
  int mode;  // rotates modes (mode, mode + 1)
  double c;
  double s;
};

// Decompose an orthogonal Q into adjacent Givens rotations and a +-1
// diagonal: G_n ... G_1 Q = D. Applying U(Q) to a state is then U(D)
// followed by U(G_i^T) in reverse elimination order.
struct GivensDecomposition {
  std::vector<GivensStep> steps;  // eliminator blocks [[c, s], [-s, c]]
  Eigen::VectorXd diagonal;       // entries +-1
};

GivensDecomposition decompose_orthogonal(Eigen::MatrixXd q) {
  const Eigen::Index m = q.rows();
  GivensDecomposition out;
  for (Eigen::Index col = 0; col + 1 < m; ++col) {
    for (Eigen::Index row = m - 1; row > col; --row) {
      const double a = q(row - 1, col);
      const double b = q(row, col);
      if (std::abs(b) < 1e-300) continue;
      const double h = std::hypot(a, b);
      const double c = a / h;
      const double s = b / h;
      // rows (row-1, row) <- [[c, s], [-s, c]] * rows
      for (Eigen::Index j = col; j < m; ++j) {
        const double x = q(row - 1, j);
        const double y = q(row, j);
        q(row - 1, j) = c * x + s * y;
        q(row, j) = -s * x + c * y;
      }
      out.steps.push_back({static_cast<int>(row - 1), c, s});
    }
  }
  out.diagonal.resize(m);
  for (Eigen::Index i = 0; i < m; ++i)
    out.diagonal[i] = q(i, i) < 0.0 ? -1.0 : 1.0;
  return out;
}

// Two-mode rotation on adjacent spin-orbitals (bit, bit+1): mixes the
// (10)/(01) occupation pair with block [[c, -s], [s, c]]; (00) and (11) are
// untouched. Adjacent modes carry no Jordan-Wigner string.
void apply_adjacent_rotation(StateVector& state, int bit, double c, double s) {
  const std::size_t dim = state.dim();
  const std::uint64_t lo = std::uint64_t{1} << bit;
  const std::uint64_t hi = std::uint64_t{1} << (bit + 1);
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & lo) && !(i & hi)) {
      const std::size_t j = (i ^ lo) | hi;
      const auto a10 = state[i];
      const auto a01 = state[j];
      state[i] = c * a10 - s * a01;
      state[j] = s * a10 + c * a01;
    }
  }
}

// U(Q) for an M x M orthogonal Q, applied identically to both spin sectors.
void apply_orbital_rotation(StateVector& state, const Eigen::MatrixXd& q) {
  const int m = state.n_orbitals();
  const auto dec = decompose_orthogonal(q);

  std::uint64_t negative = 0;
  for (int p = 0; p < m; ++p)
    if (dec.diagonal[p] < 0.0) negative |= (std::uint64_t{1} << p) |
                                           (std::uint64_t{1} << (m + p));
  if (negative) {
    const std::size_t dim = state.dim();
    for (std::size_t i = 0; i < dim; ++i)
      if (std::popcount(i & negative) & 1) state[i] = -state[i];
  }
  for (auto it = dec.steps.rbegin(); it != dec.steps.rend(); ++it) {
    apply_adjacent_rotation(state, it->mode, it->c, it->s);          // alpha
    apply_adjacent_rotation(state, m + it->mode, it->c, it->s);      // beta
  }
}

// Diagonal phase exp(i J): basis state x picks up
//   sum_{s < t} J_{spat(s), spat(t)} x_s x_t  +  sum_p J_pp x_{p a} x_{p b}
// over canonical spin-orbital pairs (same-spin same-orbital pairs cannot
// occur; the on-site term is counted via both sums by convention).
void apply_density_phases(StateVector& state, const Eigen::MatrixXd& j) {
  const int m = state.n_orbitals();
  const std::size_t dim = state.dim();
  std::vector<int> occ;
  for (std::size_t x = 0; x < dim; ++x) {
    occ.clear();
    std::uint64_t bits = x;
    while (bits) {
      occ.push_back(std::countr_zero(bits));
      bits &= bits - 1;
    }
    double phase = 0.0;
    for (std::size_t a = 0; a < occ.size(); ++a)
      for (std::size_t b = a + 1; b < occ.size(); ++b)
        phase += j(occ[a] % m, occ[b] % m);
    for (int p = 0; p < m; ++p)
      if (((x >> p) & 1) && ((x >> (m + p)) & 1)) phase += j(p, p);
    if (phase != 0.0)
      state[x] *= std::exp(std::complex<double>(0.0, phase));
  }
}

}  // namespace

StateVector lucj_prepare(const LucjParameters& params) {
  params.validate();
  const int m = params.n_orbitals;
  if (m > 8)
    throw ValidationError("lucj_prepare: statevector limit is 8 orbitals");

  StateVector state(m);
  const std::size_t ref = params.reference.alpha |
                          (params.reference.beta << m);
  state[ref] = {1.0, 0.0};

  for (const auto& rep : params.reps) {
    const Eigen::MatrixXd u = exp_antisymmetric(-rep.orbital_generator);
    apply_orbital_rotation(state, u);
    apply_density_phases(state, rep.coupling);
    apply_orbital_rotation(state, u.transpose());  // exp(+K) = exp(-K)^T
  }
  apply_orbital_rotation(state,
                         exp_antisymmetric(-params.final_orbital_generator));
  return state;
}

SampleSet born_sample(const StateVector& state, std::uint64_t shots,
                      std::uint64_t seed) {
  if (shots < 1) throw ValidationError("born_sample: shots must be >= 1");
  const double n = state.norm();
  if (std::abs(n - 1.0) > 1e-10)
    throw ValidationError("born_sample: state not normalized");

  const std::size_t dim = state.dim();
  std::vector<double> cdf(dim);
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    acc += std::norm(state[i]);
    cdf[i] = acc;
  }

  const int m = state.n_orbitals();
  const std::uint64_t mask = (std::uint64_t{1} << m) - 1;
  Rng rng(seed);
  SampleSet out(m);
  for (std::uint64_t s = 0; s < shots; ++s) {
    const std::size_t x = rng.categorical_cdf(cdf);
    out.add({x & mask, (x >> m) & mask});
  }
  return out;
}

SampleSet bitflip_noise(const SampleSet& samples, double p,
                        std::uint64_t seed) {
  if (p < 0.0 || p > 1.0)
    throw ValidationError("bitflip_noise: p must be in [0, 1]");
  if (p == 0.0) return samples;

  const int m = samples.n_orbitals();
  const std::uint64_t range = m >= 64 ? ~0ull : ((1ull << m) - 1);
  Rng rng(seed);
  SampleSet out(m);
  for (const auto& [pattern, count] : samples.counts()) {
    for (std::uint64_t shot = 0; shot < count; ++shot) {
      Determinant noisy = pattern;
      if (p == 1.0) {
        noisy.alpha = ~pattern.alpha & range;
        noisy.beta = ~pattern.beta & range;
      } else {
        for (int bit = 0; bit < m; ++bit)
          if (rng.uniform01() < p) noisy.alpha ^= 1ull << bit;
        for (int bit = 0; bit < m; ++bit)
          if (rng.uniform01() < p) noisy.beta ^= 1ull << bit;
      }
      out.add(noisy);
    }
  }
  return out;
}

SampleSet exact_state_sample(const MolecularHamiltonian& h,
                             std::uint64_t shots, std::uint64_t seed,
                             int dense_limit) {
  const auto space = enumerate_fci_space(h.n_orbitals(), h.n_alpha(),
                                         h.n_beta());
  if (space.size() > static_cast<std::size_t>(dense_limit))
    throw ValidationError("exact_state_sample: FCI dimension " +
                          std::to_string(space.size()) + " over dense limit");
  const auto ph = build_subspace_matrix(h, space);
  const auto gs = dense_ground(ph.matrix, ph.e_nuc, dense_limit);

  std::vector<double> cdf(space.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    acc += gs.coeffs[static_cast<Eigen::Index>(i)] *
           gs.coeffs[static_cast<Eigen::Index>(i)];
    cdf[i] = acc;
  }
  Rng rng(seed);
  SampleSet out(h.n_orbitals());
  for (std::uint64_t s = 0; s < shots; ++s)
    out.add(space[rng.categorical_cdf(cdf)]);
  return out;
}

}  // namespace qcfe
