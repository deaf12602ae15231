#!/usr/bin/env python3
"""Regenerates the committed electronic-structure fixtures.

Self-contained minimal-basis (STO-3G) integrals for hydrogen systems:
closed-form s-type Gaussian integrals, an RHF solver, and a dense FCI by
second-quantized operator application over the full Fock space. The FCI
route here is intentionally independent of the C++ library (different
language, different algorithm) so the committed energies act as an
external reference.

Outputs: h2.fcidump, h4.fcidump, golden.json (run from this directory).
"""
import json
import numpy as np
from scipy.special import erf

ANG2BOHR = 1.8897259886

# STO-3G hydrogen: exponents and contraction coefficients
STO3G_H_EXP = np.array([3.42525091, 0.62391373, 0.16885540])
STO3G_H_COEF = np.array([0.15432897, 0.53532814, 0.44463454])


def boys0(t):
    if t < 1e-12:
        return 1.0 - t / 3.0
    return 0.5 * np.sqrt(np.pi / t) * erf(np.sqrt(t))


class SBasis:
    """One contracted s function per center."""

    def __init__(self, centers):
        self.centers = [np.asarray(c, dtype=float) for c in centers]
        self.n = len(centers)
        self.exps = STO3G_H_EXP
        self.coefs = STO3G_H_COEF * (2.0 * STO3G_H_EXP / np.pi) ** 0.75

    def overlap_kinetic(self):
        n = self.n
        S = np.zeros((n, n))
        T = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                d = self.centers[i] - self.centers[j]
                rab2 = float(d @ d)
                for a, ca in zip(self.exps, self.coefs):
                    for b, cb in zip(self.exps, self.coefs):
                        p = a + b
                        mu = a * b / p
                        pref = ca * cb * (np.pi / p) ** 1.5 * np.exp(-mu * rab2)
                        S[i, j] += pref
                        T[i, j] += pref * mu * (3.0 - 2.0 * mu * rab2)
        return S, T

    def nuclear(self, charges_centers):
        n = self.n
        V = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                A, B = self.centers[i], self.centers[j]
                d = A - B
                rab2 = float(d @ d)
                for a, ca in zip(self.exps, self.coefs):
                    for b, cb in zip(self.exps, self.coefs):
                        p = a + b
                        mu = a * b / p
                        P = (a * A + b * B) / p
                        for (Z, C) in charges_centers:
                            rpc2 = float((P - C) @ (P - C))
                            V[i, j] += (-Z * ca * cb * 2.0 * np.pi / p
                                        * np.exp(-mu * rab2) * boys0(p * rpc2))
        return V

    def eri(self):
        n = self.n
        v = np.zeros((n, n, n, n))
        for i in range(n):
            for j in range(n):
                A, B = self.centers[i], self.centers[j]
                rab2 = float((A - B) @ (A - B))
                for k in range(n):
                    for l in range(n):
                        C, D = self.centers[k], self.centers[l]
                        rcd2 = float((C - D) @ (C - D))
                        val = 0.0
                        for a, ca in zip(self.exps, self.coefs):
                            for b, cb in zip(self.exps, self.coefs):
                                p = a + b
                                P = (a * A + b * B) / p
                                kab = np.exp(-a * b / p * rab2)
                                for c, cc in zip(self.exps, self.coefs):
                                    for d_, cd in zip(self.exps, self.coefs):
                                        q = c + d_
                                        Q = (c * C + d_ * D) / q
                                        kcd = np.exp(-c * d_ / q * rcd2)
                                        rpq2 = float((P - Q) @ (P - Q))
                                        val += (ca * cb * cc * cd
                                                * 2.0 * np.pi ** 2.5
                                                / (p * q * np.sqrt(p + q))
                                                * kab * kcd
                                                * boys0(p * q / (p + q) * rpq2))
                        v[i, j, k, l] = val
        return v


def rhf(S, Hcore, eri, nelec, e_nuc, maxiter=400, tol=1e-13):
    nocc = nelec // 2
    w, U = np.linalg.eigh(S)
    X = U @ np.diag(w ** -0.5) @ U.T
    F = Hcore.copy()
    e_old = 0.0
    for it in range(maxiter):
        Fp = X.T @ F @ X
        _, Cp = np.linalg.eigh(Fp)
        C = X @ Cp
        Cocc = C[:, :nocc]
        D = 2.0 * Cocc @ Cocc.T
        J = np.einsum('pqrs,rs->pq', eri, D)
        K = np.einsum('prqs,rs->pq', eri, D)
        F = Hcore + J - 0.5 * K
        e_elec = 0.5 * np.sum(D * (Hcore + F))
        if abs(e_elec - e_old) < tol and it > 1:
            break
        e_old = e_elec
    return e_elec + e_nuc, C


def annihilate(state, so):
    if not (state >> so) & 1:
        return None
    below = bin(state & ((1 << so) - 1)).count('1')
    return ((-1) ** below, state & ~(1 << so))


def create(state, so):
    if (state >> so) & 1:
        return None
    below = bin(state & ((1 << so) - 1)).count('1')
    return ((-1) ** below, state | (1 << so))


def fock_hamiltonian(h, v, M):
    """Dense electronic Hamiltonian over the 4^M Fock space.

    Spin-orbital bit order: alpha p -> bit p, beta p -> bit M+p.
    Two-body term in chemists' notation: 1/2 (pq|rs) a+_ps a+_rt a_st a_qs.
    """
    dim = 1 << (2 * M)
    H = np.zeros((dim, dim))
    spins = [0, M]
    for x in range(dim):
        for off in spins:
            for q in range(M):
                rq = annihilate(x, off + q)
                if rq is None:
                    continue
                s1, y = rq
                for p in range(M):
                    rp = create(y, off + p)
                    if rp is None:
                        continue
                    s2, z = rp
                    H[z, x] += s1 * s2 * h[p, q]
        for offs in spins:
            for offt in spins:
                for q in range(M):
                    r1 = annihilate(x, offs + q)
                    if r1 is None:
                        continue
                    sg1, y1 = r1
                    for s in range(M):
                        r2 = annihilate(y1, offt + s)
                        if r2 is None:
                            continue
                        sg2, y2 = r2
                        for r in range(M):
                            r3 = create(y2, offt + r)
                            if r3 is None:
                                continue
                            sg3, y3 = r3
                            for p in range(M):
                                r4 = create(y3, offs + p)
                                if r4 is None:
                                    continue
                                sg4, y4 = r4
                                H[y4, x] += 0.5 * sg1 * sg2 * sg3 * sg4 * v[p, q, r, s]
    return H


def fci_ground_energy(h, v, M, na, nb, e_nuc):
    H = fock_hamiltonian(h, v, M)
    idx = [x for x in range(1 << (2 * M))
           if bin(x & ((1 << M) - 1)).count('1') == na
           and bin(x >> M).count('1') == nb]
    w = np.linalg.eigh(H[np.ix_(idx, idx)])[0]
    return w[0] + e_nuc


def write_fcidump(path, h, v, e_nuc, nelec, ms2=0):
    M = h.shape[0]
    lines = []
    lines.append(f"&FCI NORB={M},NELEC={nelec},MS2={ms2},")
    lines.append("  ORBSYM=" + "1," * M)
    lines.append("  ISYM=1,")
    lines.append("&END")

    def pq(p, q):
        return p * (p + 1) // 2 + q

    for p in range(M):
        for q in range(p + 1):
            for r in range(M):
                for s in range(r + 1):
                    if pq(r, s) > pq(p, q):
                        continue
                    val = v[p, q, r, s]
                    if val != 0.0:
                        lines.append(f"{float(val)!r} {p+1} {q+1} {r+1} {s+1}")
    for p in range(M):
        for q in range(p + 1):
            if h[p, q] != 0.0:
                lines.append(f"{float(h[p, q])!r} {p+1} {q+1} 0 0")
    lines.append(f"{float(e_nuc)!r} 0 0 0 0")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def make(name, geom_ang, nelec):
    geom = [np.array(g) * ANG2BOHR for g in geom_ang]
    basis = SBasis(geom)
    S, T = basis.overlap_kinetic()
    V = basis.nuclear([(1.0, c) for c in geom])
    Hcore = T + V
    eri = basis.eri()
    e_nuc = 0.0
    for i in range(len(geom)):
        for j in range(i + 1, len(geom)):
            e_nuc += 1.0 / np.linalg.norm(geom[i] - geom[j])
    e_hf, C = rhf(S, Hcore, eri, nelec, e_nuc)
    h_mo = C.T @ Hcore @ C
    v_mo = np.einsum('pi,qj,pqrs,rk,sl->ijkl', C, C, eri, C, C, optimize=True)
    M = len(geom)
    # assign every 8-fold permutation the bit-identical canonical value
    h_sym = np.zeros_like(h_mo)
    for p in range(M):
        for q in range(p + 1):
            val = 0.5 * (h_mo[p, q] + h_mo[q, p])
            h_sym[p, q] = h_sym[q, p] = val
    v_sym = np.zeros_like(v_mo)
    for p in range(M):
        for q in range(p + 1):
            for r in range(p + 1):
                for s in range(r + 1):
                    if r * (r + 1) // 2 + s > p * (p + 1) // 2 + q:
                        continue
                    perms = [(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                             (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)]
                    val = sum(float(v_mo[t]) for t in perms) / 8.0
                    for t in perms:
                        v_sym[t] = val
    na = nb = nelec // 2
    write_fcidump(f"{name}.fcidump", h_sym, v_sym, e_nuc, nelec)
    # golden energy from the exact values written to the file
    e_fci = fci_ground_energy(h_sym, v_sym, M, na, nb, e_nuc)
    print(f"{name}: E_HF={e_hf!r}  E_FCI={e_fci!r}")
    return {"norb": M, "nelec": nelec, "ms2": 0,
            "hf_energy": float(e_hf), "fci_energy": float(e_fci)}


def main():
    golden = {}
    golden["h2"] = make("h2", [(0, 0, 0), (0, 0, 0.735)], 2)
    golden["h4"] = make("h4", [(0, 0, 0), (1.2, 0, 0), (1.2, 1.2, 0), (0, 1.2, 0)], 4)
    with open("golden.json", "w") as f:
        json.dump(golden, f, indent=2)


if __name__ == "__main__":
    main()
