// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/hci.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "qcfe/errors.hpp"

namespace qcfe {

namespace {

struct DoubleCandidate {
  double magnitude;
  int a;
  int b;
};

// Magnitude-sorted double-excitation integrals. The element of a double
// excitation depends only on the four orbitals involved, so candidates can
// be pre-sorted once per Hamiltonian and walked until the cutoff:
//   same spin  (i j -> a b):  (ia|jb) - (ib|ja)
//   mixed spin (ia jb -> aa bb): (ia|jb)
class HeatbathTables {
 public:
  explicit HeatbathTables(const MolecularHamiltonian& h) : m_(h.n_orbitals()) {
    same_.resize(static_cast<std::size_t>(m_) * m_);
    mixed_.resize(static_cast<std::size_t>(m_) * m_);
    for (int i = 0; i < m_; ++i) {
      for (int j = i + 1; j < m_; ++j) {
        auto& list = same_[pair_key(i, j)];
        for (int a = 0; a < m_; ++a) {
          if (a == i || a == j) continue;
          for (int b = a + 1; b < m_; ++b) {
            if (b == i || b == j) continue;
            const double v = h.two_body(i, a, j, b) - h.two_body(i, b, j, a);
            if (v != 0.0) list.push_back({std::abs(v), a, b});
          }
        }
        sort_desc(list);
      }
    }
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < m_; ++j) {
        auto& list = mixed_[pair_key(i, j)];
        for (int a = 0; a < m_; ++a) {
          if (a == i) continue;
          for (int b = 0; b < m_; ++b) {
            if (b == j) continue;
            const double v = h.two_body(i, a, j, b);
            if (v != 0.0) list.push_back({std::abs(v), a, b});
          }
        }
        sort_desc(list);
      }
    }
  }

  const std::vector<DoubleCandidate>& same_spin(int i, int j) const {
    return same_[pair_key(std::min(i, j), std::max(i, j))];
  }
  const std::vector<DoubleCandidate>& mixed_spin(int i, int j) const {
    return mixed_[pair_key(i, j)];
  }

 private:
  std::size_t pair_key(int i, int j) const {
    return static_cast<std::size_t>(i) * m_ + j;
  }
  static void sort_desc(std::vector<DoubleCandidate>& list) {
    std::sort(list.begin(), list.end(), [](const auto& x, const auto& y) {
      if (x.magnitude != y.magnitude) return x.magnitude > y.magnitude;
      if (x.a != y.a) return x.a < y.a;
      return x.b < y.b;
    });
  }

  int m_;
  std::vector<std::vector<DoubleCandidate>> same_;
  std::vector<std::vector<DoubleCandidate>> mixed_;
};

void occupied_of(std::uint64_t mask, std::vector<int>& out) {
  out.clear();
  while (mask) {
    out.push_back(std::countr_zero(mask));
    mask &= mask - 1;
  }
}

// |<single excitation|H|d>| for i -> a within one spin of d.
double single_magnitude(const MolecularHamiltonian& h, const Determinant& d,
                        bool alpha_spin, int i, int a) {
  double e = h.one_body(i, a);
  std::uint64_t occ = d.alpha;
  while (occ) {
    const int j = std::countr_zero(occ);
    occ &= occ - 1;
    if (alpha_spin && j == i) continue;
    e += h.two_body(i, a, j, j);
    if (alpha_spin) e -= h.two_body(i, j, j, a);
  }
  occ = d.beta;
  while (occ) {
    const int j = std::countr_zero(occ);
    occ &= occ - 1;
    if (!alpha_spin && j == i) continue;
    e += h.two_body(i, a, j, j);
    if (!alpha_spin) e -= h.two_body(i, j, j, a);
  }
  return std::abs(e);
}

}  // namespace

std::vector<Determinant> heatbath_expand(const MolecularHamiltonian& h,
                                         const SubspaceWavefunction& psi,
                                         double epsilon) {
  validate_wavefunction(psi);
  if (!(epsilon > 0.0))
    throw ValidationError("heatbath_expand: epsilon must be positive");
  const int m = h.n_orbitals();
  const HeatbathTables tables(h);

  std::set<Determinant> selected(psi.dets.begin(), psi.dets.end());
  const std::uint64_t range = m >= 64 ? ~0ull : ((1ull << m) - 1);

  std::vector<std::vector<Determinant>> found(psi.dets.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < psi.dets.size(); ++k) {
    const double ck = std::abs(psi.coeffs[static_cast<Eigen::Index>(k)]);
    if (ck == 0.0 || !std::isfinite(epsilon / ck)) continue;
    const double threshold = epsilon / ck;
    const Determinant& d = psi.dets[k];
    auto& local = found[k];

    std::vector<int> occa, occb;
    occupied_of(d.alpha, occa);
    occupied_of(d.beta, occb);

    // singles, full matrix element evaluated directly
    for (int spin = 0; spin < 2; ++spin) {
      const std::uint64_t mask = spin == 0 ? d.alpha : d.beta;
      const auto& occ = spin == 0 ? occa : occb;
      std::uint64_t vir = ~mask & range;
      for (int i : occ) {
        std::uint64_t v = vir;
        while (v) {
          const int a = std::countr_zero(v);
          v &= v - 1;
          if (single_magnitude(h, d, spin == 0, i, a) > threshold) {
            Determinant e = d;
            if (spin == 0)
              e.alpha ^= (1ull << i) | (1ull << a);
            else
              e.beta ^= (1ull << i) | (1ull << a);
            local.push_back(e);
          }
        }
      }
    }

    // same-spin doubles through the sorted tables
    for (int spin = 0; spin < 2; ++spin) {
      const std::uint64_t mask = spin == 0 ? d.alpha : d.beta;
      const auto& occ = spin == 0 ? occa : occb;
      for (std::size_t x = 0; x < occ.size(); ++x) {
        for (std::size_t y = x + 1; y < occ.size(); ++y) {
          for (const auto& cand : tables.same_spin(occ[x], occ[y])) {
            if (cand.magnitude <= threshold) break;
            if ((mask >> cand.a) & 1 || (mask >> cand.b) & 1) continue;
            Determinant e = d;
            const std::uint64_t flip = (1ull << occ[x]) | (1ull << occ[y]) |
                                       (1ull << cand.a) | (1ull << cand.b);
            if (spin == 0)
              e.alpha ^= flip;
            else
              e.beta ^= flip;
            local.push_back(e);
          }
        }
      }
    }

    // alpha-beta doubles
    for (int i : occa) {
      for (int j : occb) {
        for (const auto& cand : tables.mixed_spin(i, j)) {
          if (cand.magnitude <= threshold) break;
          if ((d.alpha >> cand.a) & 1 || (d.beta >> cand.b) & 1) continue;
          Determinant e = d;
          e.alpha ^= (1ull << i) | (1ull << cand.a);
          e.beta ^= (1ull << j) | (1ull << cand.b);
          local.push_back(e);
        }
      }
    }
  }

  for (const auto& local : found)
    selected.insert(local.begin(), local.end());
  return {selected.begin(), selected.end()};
}

HciResult hci_solve(const MolecularHamiltonian& h, double epsilon,
                    const Determinant& initial, const DavidsonOptions& opts,
                    int max_rounds) {
  if (!is_valid_for(initial, h))
    throw ValidationError("hci_solve: initial determinant invalid for H");

  using clock = std::chrono::steady_clock;
  HciResult result;
  result.wavefunction.dets = {initial};
  result.wavefunction.coeffs = Eigen::VectorXd::Ones(1);
  result.energy = slater_condon_element(h, initial, initial) + h.e_nuc();
  result.trace.push_back({0, 1, result.energy, 0.0});

  for (int round = 1; round <= max_rounds; ++round) {
    const auto t0 = clock::now();
    auto grown = heatbath_expand(h, result.wavefunction, epsilon);
    if (grown.size() == result.wavefunction.dets.size()) break;

    auto ph = build_subspace_matrix(h, grown);
    auto [energy, psi] = davidson_ground(ph, opts);
    result.energy = energy;
    result.wavefunction = std::move(psi);
    const double wall =
        std::chrono::duration<double>(clock::now() - t0).count();
    result.trace.push_back({round, grown.size(), energy, wall});
  }
  return result;
}

}  // namespace qcfe
