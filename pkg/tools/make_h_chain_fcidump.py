#!/usr/bin/env python3
"""Generate minimal-basis (STO-6G) FCIDUMP files for linear hydrogen chains.

Self-contained RHF over s-type contracted Gaussians: closed-form one- and
two-electron integrals, DIIS-accelerated SCF, MO transformation, FCIDUMP
output.  Used once to produce the frozen test fixtures under data/fcidump/;
not part of the installed package.
"""

import argparse
import itertools
import math

import numpy as np
from scipy.special import erf

ANGSTROM_TO_BOHR = 1.8897259886

# STO-6G expansion of a 1s Slater orbital, scaled for hydrogen (zeta = 1.24).
STO6G_H_EXPONENTS = np.array(
    [35.52322122, 6.513143725, 1.822142904, 0.625955266, 0.243076747, 0.100112428]
)
STO6G_H_COEFFS = np.array(
    [0.00916359628, 0.04936149294, 0.16853830490, 0.37056279970, 0.41649152980, 0.13033408410]
)


def boys0(t):
    """F0(t) = 0.5 sqrt(pi/t) erf(sqrt(t)), with the t -> 0 limit handled."""
    t = np.asarray(t, dtype=float)
    small = t < 1e-12
    safe = np.where(small, 1.0, t)
    val = 0.5 * np.sqrt(np.pi / safe) * erf(np.sqrt(safe))
    return np.where(small, 1.0 - t / 3.0, val)


class SBasis:
    """Contracted s-type Gaussian basis over a set of centers."""

    def __init__(self, centers, exponents, coeffs):
        self.centers = [np.asarray(c, dtype=float) for c in centers]
        self.exponents = exponents
        # Normalize primitives, then the contraction.
        prim_norm = (2.0 * exponents / np.pi) ** 0.75
        c = coeffs * prim_norm
        self_overlap = 0.0
        for a, ca in zip(exponents, c):
            for b, cb in zip(exponents, c):
                self_overlap += ca * cb * (np.pi / (a + b)) ** 1.5
        self.coeffs = c / math.sqrt(self_overlap)

    def __len__(self):
        return len(self.centers)


def _pair_terms(basis, i, j):
    """Per-primitive-pair prefactors for shells centered at A_i, A_j."""
    A, B = basis.centers[i], basis.centers[j]
    ab2 = float(np.dot(A - B, A - B))
    al = basis.exponents[:, None]
    be = basis.exponents[None, :]
    p = al + be
    mu = al * be / p
    K = np.exp(-mu * ab2)
    cc = basis.coeffs[:, None] * basis.coeffs[None, :]
    P = (al[..., None] * A + be[..., None] * B) / p[..., None]
    return p, mu, K, cc, P, ab2


def overlap_kinetic(basis):
    n = len(basis)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            p, mu, K, cc, _, ab2 = _pair_terms(basis, i, j)
            s_prim = (np.pi / p) ** 1.5 * K
            t_prim = mu * (3.0 - 2.0 * mu * ab2) * s_prim
            S[i, j] = S[j, i] = float(np.sum(cc * s_prim))
            T[i, j] = T[j, i] = float(np.sum(cc * t_prim))
    return S, T


def nuclear_attraction(basis, charges, positions):
    n = len(basis)
    V = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            p, _, K, cc, P, _ = _pair_terms(basis, i, j)
            acc = 0.0
            for Z, C in zip(charges, positions):
                pc2 = np.sum((P - C) ** 2, axis=-1)
                acc += -Z * float(np.sum(cc * (2.0 * np.pi / p) * K * boys0(p * pc2)))
            V[i, j] = V[j, i] = acc
    return V


def electron_repulsion(basis):
    n = len(basis)
    eri = np.zeros((n, n, n, n))
    pair_cache = {}
    for i in range(n):
        for j in range(n):
            p, _, K, cc, P, _ = _pair_terms(basis, i, j)
            pair_cache[(i, j)] = (p.ravel(), (cc * K).ravel(), P.reshape(-1, 3))
    done = set()
    for i, j, k, l in itertools.product(range(n), repeat=4):
        key = _canonical_eri_key(i, j, k, l)
        if key in done:
            continue
        done.add(key)
        pa, ca, Pa = pair_cache[(i, j)]
        pb, cb, Pb = pair_cache[(k, l)]
        psum = pa[:, None] + pb[None, :]
        pq2 = np.sum((Pa[:, None, :] - Pb[None, :, :]) ** 2, axis=-1)
        pref = 2.0 * np.pi ** 2.5 / (pa[:, None] * pb[None, :] * np.sqrt(psum))
        val = float(
            np.sum(
                ca[:, None] * cb[None, :] * pref * boys0(pa[:, None] * pb[None, :] / psum * pq2)
            )
        )
        for (a, b, c, d) in _eri_permutations(i, j, k, l):
            eri[a, b, c, d] = val
    return eri


def _eri_permutations(i, j, k, l):
    return {
        (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
        (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
    }


def _canonical_eri_key(i, j, k, l):
    ij = (max(i, j), min(i, j))
    kl = (max(k, l), min(k, l))
    return max(ij, kl) + min(ij, kl)


def nuclear_repulsion(charges, positions):
    e = 0.0
    for a in range(len(charges)):
        for b in range(a):
            e += charges[a] * charges[b] / np.linalg.norm(positions[a] - positions[b])
    return e


def rhf(S, hcore, eri, n_occ, e_nuc, max_cycles=200, conv=1e-12):
    """Closed-shell RHF with DIIS on the orthonormalized Fock commutator."""
    n = S.shape[0]
    evals, evecs = np.linalg.eigh(S)
    X = evecs @ np.diag(evals ** -0.5) @ evecs.T

    def solve_fock(F):
        Fp = X.T @ F @ X
        _, Cp = np.linalg.eigh(Fp)
        C = X @ Cp
        Cocc = C[:, :n_occ]
        return C, 2.0 * Cocc @ Cocc.T

    C, D = solve_fock(hcore)
    energy = 0.0
    diis_F, diis_err = [], []
    for _ in range(max_cycles):
        J = np.einsum("pqrs,rs->pq", eri, D)
        K = np.einsum("prqs,rs->pq", eri, D)
        F = hcore + J - 0.5 * K
        err = X.T @ (F @ D @ S - S @ D @ F) @ X
        diis_F.append(F)
        diis_err.append(err)
        if len(diis_F) > 8:
            diis_F.pop(0)
            diis_err.pop(0)
        if len(diis_F) > 1:
            F = _diis_extrapolate(diis_F, diis_err)
        C, D = solve_fock(F)
        e_new = 0.5 * np.einsum("pq,pq->", D, hcore + F) + e_nuc
        if abs(e_new - energy) < conv and np.max(np.abs(err)) < 1e-8:
            return e_new, C
        energy = e_new
    raise RuntimeError(f"SCF failed to converge; last energy {energy:.12f}")


def _diis_extrapolate(fock_list, err_list):
    m = len(fock_list)
    B = -np.ones((m + 1, m + 1))
    B[m, m] = 0.0
    for a in range(m):
        for b in range(m):
            B[a, b] = np.sum(err_list[a] * err_list[b])
    rhs = np.zeros(m + 1)
    rhs[m] = -1.0
    try:
        w = np.linalg.solve(B, rhs)[:m]
    except np.linalg.LinAlgError:
        return fock_list[-1]
    return sum(wi * Fi for wi, Fi in zip(w, fock_list))


def mo_integrals(C, hcore, eri):
    h_mo = C.T @ hcore @ C
    tmp = np.einsum("pqrs,pi->iqrs", eri, C, optimize=True)
    tmp = np.einsum("iqrs,qj->ijrs", tmp, C, optimize=True)
    tmp = np.einsum("ijrs,rk->ijks", tmp, C, optimize=True)
    return h_mo, np.einsum("ijks,sl->ijkl", tmp, C, optimize=True)


def write_fcidump(path, h_mo, eri_mo, e_core, n_elec, ms2=0, tol=1e-14):
    n = h_mo.shape[0]
    with open(path, "w") as out:
        out.write(f" &FCI NORB={n:4d},NELEC={n_elec:3d},MS2={ms2:d},\n")
        out.write("  ORBSYM=" + "1," * n + "\n")
        out.write("  ISYM=1,\n")
        out.write(" &END\n")
        for p in range(n):
            for q in range(p + 1):
                for r in range(p + 1):
                    smax = q if r == p else r
                    for s in range(smax + 1):
                        val = eri_mo[p, q, r, s]
                        if abs(val) > tol:
                            out.write(f"{val:23.16E} {p+1:3d} {q+1:3d} {r+1:3d} {s+1:3d}\n")
        for p in range(n):
            for q in range(p + 1):
                if abs(h_mo[p, q]) > tol:
                    out.write(f"{h_mo[p, q]:23.16E} {p+1:3d} {q+1:3d}   0   0\n")
        out.write(f"{e_core:23.16E}   0   0   0   0\n")


def h_chain_fcidump(n_atoms, spacing_angstrom, path):
    spacing = spacing_angstrom * ANGSTROM_TO_BOHR
    positions = [np.array([0.0, 0.0, k * spacing]) for k in range(n_atoms)]
    charges = [1.0] * n_atoms
    basis = SBasis(positions, STO6G_H_EXPONENTS, STO6G_H_COEFFS)

    S, T = overlap_kinetic(basis)
    V = nuclear_attraction(basis, charges, positions)
    eri = electron_repulsion(basis)
    e_nuc = nuclear_repulsion(charges, positions)

    e_rhf, C = rhf(S, T + V, eri, n_atoms // 2, e_nuc)
    h_mo, eri_mo = mo_integrals(C, T + V, eri)
    write_fcidump(path, h_mo, eri_mo, e_nuc, n_atoms)
    return e_rhf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("n_atoms", type=int)
    ap.add_argument("spacing", type=float, help="H-H distance in Angstrom")
    ap.add_argument("output")
    args = ap.parse_args()
    e_rhf = h_chain_fcidump(args.n_atoms, args.spacing, args.output)
    print(f"H{args.n_atoms} r={args.spacing:.3f} A  E_RHF = {e_rhf:.10f} Ha  -> {args.output}")


if __name__ == "__main__":
    main()
