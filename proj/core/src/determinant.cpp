// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/determinant.hpp"

#include "qcfe/errors.hpp"

namespace qcfe {

namespace {

inline std::uint64_t low_bits(int n) {
  return n >= 64 ? ~0ull : ((1ull << n) - 1);
}

// Parity sign over occupied orbitals strictly between two positions of the
// same spin mask.
inline int single_phase(std::uint64_t mask, int i, int a) {
  const int lo = std::min(i, a);
  const int hi = std::max(i, a);
  const std::uint64_t between = mask & (low_bits(hi) & ~low_bits(lo + 1));
  return (std::popcount(between) & 1) ? -1 : 1;
}

inline void occupied_list(std::uint64_t mask, std::vector<int>& out) {
  out.clear();
  while (mask) {
    out.push_back(std::countr_zero(mask));
    mask &= mask - 1;
  }
}

}  // namespace

bool is_valid_for(const Determinant& d, const MolecularHamiltonian& h) {
  const std::uint64_t range = low_bits(h.n_orbitals());
  if ((d.alpha & ~range) || (d.beta & ~range)) return false;
  return n_alpha_of(d) == h.n_alpha() && n_beta_of(d) == h.n_beta();
}

int excitation_degree(const Determinant& a, const Determinant& b) {
  return (std::popcount(a.alpha ^ b.alpha) + std::popcount(a.beta ^ b.beta)) /
         2;
}

namespace {

double diagonal_element(const MolecularHamiltonian& h, const Determinant& d) {
  std::vector<int> occa, occb;
  occupied_list(d.alpha, occa);
  occupied_list(d.beta, occb);
  double e = 0.0;
  for (int i : occa) e += h.one_body(i, i);
  for (int i : occb) e += h.one_body(i, i);
  for (int i : occa)
    for (int j : occa) e += 0.5 * (h.two_body(i, i, j, j) - h.two_body(i, j, j, i));
  for (int i : occb)
    for (int j : occb) e += 0.5 * (h.two_body(i, i, j, j) - h.two_body(i, j, j, i));
  for (int i : occa)
    for (int j : occb) e += h.two_body(i, i, j, j);
  return e;
}

// <a|H|b> with b = single excitation i -> p in spin sigma of a.
double single_element(const MolecularHamiltonian& h, const Determinant& a,
                      const Determinant& b, bool alpha_spin) {
  const std::uint64_t ma = alpha_spin ? a.alpha : a.beta;
  const std::uint64_t mb = alpha_spin ? b.alpha : b.beta;
  const std::uint64_t diff = ma ^ mb;
  const int i = std::countr_zero(ma & diff);
  const int p = std::countr_zero(mb & diff);

  double e = h.one_body(i, p);
  std::vector<int> occ;
  // occupied orbitals common to both determinants
  occupied_list((a.alpha & b.alpha), occ);
  for (int j : occ) {
    e += h.two_body(i, p, j, j);
    if (alpha_spin) e -= h.two_body(i, j, j, p);
  }
  occupied_list((a.beta & b.beta), occ);
  for (int j : occ) {
    e += h.two_body(i, p, j, j);
    if (!alpha_spin) e -= h.two_body(i, j, j, p);
  }
  return single_phase(ma, i, p) * e;
}

double double_element(const MolecularHamiltonian& h, const Determinant& a,
                      const Determinant& b) {
  const std::uint64_t da = a.alpha ^ b.alpha;
  const std::uint64_t db = a.beta ^ b.beta;
  const int na = std::popcount(da);

  if (na == 2) {  // one excitation in each spin sector
    const int i = std::countr_zero(a.alpha & da);
    const int p = std::countr_zero(b.alpha & da);
    const int j = std::countr_zero(a.beta & db);
    const int q = std::countr_zero(b.beta & db);
    const int phase =
        single_phase(a.alpha, i, p) * single_phase(a.beta, j, q);
    return phase * h.two_body(i, p, j, q);
  }

  // same-spin double: holes i<j in a, particles p<q in b, pairing (i->p, j->q)
  const std::uint64_t ma = na == 4 ? a.alpha : a.beta;
  const std::uint64_t mb = na == 4 ? b.alpha : b.beta;
  const std::uint64_t diff = ma ^ mb;
  std::uint64_t holes = ma & diff;
  std::uint64_t parts = mb & diff;
  const int i = std::countr_zero(holes);
  holes &= holes - 1;
  const int j = std::countr_zero(holes);
  const int p = std::countr_zero(parts);
  parts &= parts - 1;
  const int q = std::countr_zero(parts);

  const int phase1 = single_phase(ma, i, p);
  const std::uint64_t mid = ma ^ (1ull << i) ^ (1ull << p);
  const int phase2 = single_phase(mid, j, q);
  return phase1 * phase2 * (h.two_body(i, p, j, q) - h.two_body(i, q, j, p));
}

}  // namespace

double slater_condon_element(const MolecularHamiltonian& h,
                             const Determinant& a, const Determinant& b) {
  if (!is_valid_for(a, h) || !is_valid_for(b, h))
    throw ValidationError("slater_condon_element: determinant invalid for H");
  const int dega = std::popcount(a.alpha ^ b.alpha);
  const int degb = std::popcount(a.beta ^ b.beta);
  switch (dega + degb) {
    case 0:
      return diagonal_element(h, a);
    case 2:
      return single_element(h, a, b, dega == 2);
    case 4:
      return double_element(h, a, b);
    default:
      return 0.0;
  }
}

std::vector<SingleExcitation> enumerate_singles(const Determinant& d,
                                                int n_orbitals) {
  std::vector<SingleExcitation> out;
  const std::uint64_t range = low_bits(n_orbitals);
  for (int spin = 0; spin < 2; ++spin) {
    const std::uint64_t mask = spin == 0 ? d.alpha : d.beta;
    std::uint64_t occ = mask;
    while (occ) {
      const int i = std::countr_zero(occ);
      occ &= occ - 1;
      std::uint64_t vir = ~mask & range;
      while (vir) {
        const int a = std::countr_zero(vir);
        vir &= vir - 1;
        Determinant e = d;
        const std::uint64_t flipped = mask ^ (1ull << i) ^ (1ull << a);
        if (spin == 0)
          e.alpha = flipped;
        else
          e.beta = flipped;
        out.push_back({e, single_phase(mask, i, a)});
      }
    }
  }
  return out;
}

AppliedExcitation apply_excitation(const Determinant& d, int create_so,
                                   int annihilate_so, int n_orbitals) {
  const int n_so = 2 * n_orbitals;
  if (create_so < 0 || create_so >= n_so || annihilate_so < 0 ||
      annihilate_so >= n_so)
    throw ValidationError("apply_excitation: spin-orbital index out of range");

  // occupied count below position s in the canonical alpha-then-beta order
  auto occ_below = [&](const Determinant& det, int s) {
    if (s < n_orbitals) return std::popcount(det.alpha & low_bits(s));
    return std::popcount(det.alpha) +
           std::popcount(det.beta & low_bits(s - n_orbitals));
  };
  auto get_bit = [&](const Determinant& det, int s) {
    return s < n_orbitals ? (det.alpha >> s) & 1
                          : (det.beta >> (s - n_orbitals)) & 1;
  };
  auto flip_bit = [&](Determinant& det, int s) {
    if (s < n_orbitals)
      det.alpha ^= 1ull << s;
    else
      det.beta ^= 1ull << (s - n_orbitals);
  };

  if (!get_bit(d, annihilate_so)) return {d, 0};
  int sign = (occ_below(d, annihilate_so) & 1) ? -1 : 1;
  Determinant mid = d;
  flip_bit(mid, annihilate_so);
  if (get_bit(mid, create_so)) return {d, 0};
  if (occ_below(mid, create_so) & 1) sign = -sign;
  flip_bit(mid, create_so);
  return {mid, sign};
}

std::string to_bitstring(const Determinant& d, int n_orbitals) {
  std::string s(2 * static_cast<std::size_t>(n_orbitals), '0');
  for (int p = 0; p < n_orbitals; ++p) {
    if ((d.alpha >> p) & 1) s[p] = '1';
    if ((d.beta >> p) & 1) s[n_orbitals + p] = '1';
  }
  return s;
}

Determinant determinant_from_bitstring(std::string_view s) {
  if (s.size() % 2 != 0 || s.empty() || s.size() > 128)
    throw ValidationError("bitstring length must be even, in [2, 128]");
  const int m = static_cast<int>(s.size() / 2);
  Determinant d;
  for (int p = 0; p < m; ++p) {
    const char ca = s[p], cb = s[m + p];
    if ((ca != '0' && ca != '1') || (cb != '0' && cb != '1'))
      throw ValidationError("bitstring may contain only '0' and '1'");
    if (ca == '1') d.alpha |= 1ull << p;
    if (cb == '1') d.beta |= 1ull << p;
  }
  return d;
}

namespace {

// All k-subsets of m bits in ascending mask order (Gosper's hack).
std::vector<std::uint64_t> bit_combinations(int m, int k) {
  std::vector<std::uint64_t> out;
  if (k == 0) {
    out.push_back(0);
    return out;
  }
  if (k > m) return out;
  std::uint64_t v = low_bits(k);
  const std::uint64_t top = low_bits(m);
  while (v <= top) {
    out.push_back(v);
    const std::uint64_t t = v | (v - 1);
    if (t == ~0ull) break;
    v = (t + 1) | (((~t & (t + 1)) - 1) >> (std::countr_zero(v) + 1));
  }
  return out;
}

}  // namespace

std::vector<Determinant> enumerate_fci_space(int n_orbitals, int n_alpha,
                                             int n_beta) {
  if (n_orbitals < 1 || n_orbitals > 64)
    throw ValidationError("enumerate_fci_space: n_orbitals out of [1, 64]");
  if (n_alpha < 0 || n_beta < 0 || n_alpha > n_orbitals || n_beta > n_orbitals)
    throw ValidationError("enumerate_fci_space: bad electron counts");
  const auto alphas = bit_combinations(n_orbitals, n_alpha);
  const auto betas = bit_combinations(n_orbitals, n_beta);
  std::vector<Determinant> out;
  out.reserve(alphas.size() * betas.size());
  for (auto a : alphas)
    for (auto b : betas) out.push_back({a, b});
  return out;
}

Determinant reference_determinant(const MolecularHamiltonian& h) {
  return {low_bits(h.n_alpha()), low_bits(h.n_beta())};
}

}  // namespace qcfe
