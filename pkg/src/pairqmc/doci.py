"""Exact pair (seniority-zero) CI: the sampling distribution for the
surrogate sampler, and the pair-restricted reference energy."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .davidson import davidson_ground
from .determinants import PairString, expand_pair, slater_condon
from .integrals import IntegralSet

__all__ = ["DociSolution", "enumerate_seniority_zero", "solve_doci"]

DENSE_DIAGONALIZATION_LIMIT = 2000


@dataclass(frozen=True)
class DociSolution:
    """Ground state of the pair-restricted CI problem."""

    n_orbitals: int
    basis: tuple[PairString, ...]
    amplitudes: np.ndarray
    energy: float

    def __post_init__(self):
        norm = float(np.sum(self.amplitudes**2))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"amplitudes are not normalized: sum c^2 = {norm!r}")
        counts = {b.bit_count() for b in self.basis}
        if len(counts) > 1:
            raise ValueError("basis mixes pair counts")
        if len(set(self.basis)) != len(self.basis):
            raise ValueError("basis contains duplicate pair strings")
        self.amplitudes.setflags(write=False)

    @property
    def n_pairs(self) -> int:
        return self.basis[0].bit_count() if self.basis else 0

    def probabilities(self) -> np.ndarray:
        return self.amplitudes**2


def enumerate_seniority_zero(n_orbitals: int, n_pairs: int) -> list[PairString]:
    """All C(N, n_pairs) pair strings in ascending numeric order."""
    if not 0 <= n_pairs <= n_orbitals:
        raise ValueError(f"n_pairs={n_pairs} outside [0, {n_orbitals}]")
    return sorted(
        sum(1 << k for k in combo)
        for combo in itertools.combinations(range(n_orbitals), n_pairs)
    )


def pair_hamiltonian(basis: list[PairString], integrals: IntegralSet) -> np.ndarray:
    """Dense pair-space Hamiltonian via expansion to full determinants."""
    dim = len(basis)
    mat = np.zeros((dim, dim))
    dets = [expand_pair(p) for p in basis]
    for i in range(dim):
        for j in range(i + 1):
            # Pair strings differing in more than one position expand to
            # determinants beyond double excitations, where the element is 0.
            if (basis[i] ^ basis[j]).bit_count() > 2:
                continue
            mat[i, j] = mat[j, i] = slater_condon(dets[i], dets[j], integrals)
    return mat


def solve_doci(integrals: IntegralSet) -> DociSolution:
    """Ground eigenpair of the Hamiltonian projected on the pair space.

    Requires a closed-shell sector (n_alpha == n_beta); the sign of the
    eigenvector is fixed so its largest-magnitude amplitude is positive.
    """
    if integrals.n_alpha != integrals.n_beta:
        raise ValueError(
            "pair CI requires a closed-shell sector; got "
            f"n_alpha={integrals.n_alpha}, n_beta={integrals.n_beta}"
        )
    basis = enumerate_seniority_zero(integrals.n_orbitals, integrals.n_alpha)
    mat = pair_hamiltonian(basis, integrals)
    if len(basis) <= DENSE_DIAGONALIZATION_LIMIT:
        evals, evecs = np.linalg.eigh(mat)
        energy, vec = float(evals[0]), evecs[:, 0]
    else:
        energy, vec, _ = davidson_ground(lambda x: mat @ x, np.diagonal(mat))
    if vec[int(np.argmax(np.abs(vec)))] < 0:
        vec = -vec
    return DociSolution(
        n_orbitals=integrals.n_orbitals,
        basis=tuple(basis),
        amplitudes=vec.copy(),
        energy=energy,
    )
