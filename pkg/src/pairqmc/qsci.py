"""Projected-Hamiltonian construction over a determinant subspace and its
ground-state solution, plus the full-enumeration reference solver."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .davidson import davidson_ground
from .determinants import Determinant, slater_condon
from .integrals import IntegralSet
from .selection import DeterminantSpace

__all__ = [
    "EffectiveHamiltonian",
    "CiSolution",
    "build_heff",
    "solve_ground",
    "solve_space",
    "full_sector_space",
    "fci_oracle",
]

DENSE_SOLVE_LIMIT = 2000
NAIVE_ASSEMBLY_LIMIT = 2000
FCI_DIMENSION_CAP = 10**6


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Sparse symmetric projection of H onto a determinant space."""

    matrix: scipy.sparse.csr_matrix
    space: DeterminantSpace

    @property
    def dimension(self) -> int:
        return len(self.space)

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.matrix.diagonal())


@dataclass(frozen=True)
class CiSolution:
    """Ground eigenpair over a determinant space; doubles as the trial state
    handed to the auxiliary-field sampler."""

    energy: float
    coefficients: np.ndarray
    space: DeterminantSpace
    residual_norm: float = 0.0

    def __post_init__(self):
        norm = float(np.linalg.norm(self.coefficients))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"coefficients not normalized: |c| = {norm!r}")
        if self.coefficients.shape != (len(self.space),):
            raise ValueError("coefficient vector does not match the space size")
        self.coefficients.setflags(write=False)

    def dominant_determinant(self) -> Determinant:
        return self.space.dets[int(np.argmax(np.abs(self.coefficients)))]


def _assemble_naive(space: DeterminantSpace, integrals: IntegralSet):
    dim = len(space)
    rows, cols, vals = [], [], []
    dets = space.dets
    for i in range(dim):
        for j in range(i + 1):
            di, dj = dets[i], dets[j]
            if ((di.alpha ^ dj.alpha).bit_count() + (di.beta ^ dj.beta).bit_count()) > 4:
                continue
            value = slater_condon(di, dj, integrals)
            if value == 0.0 and i != j:
                continue
            rows.append(i)
            cols.append(j)
            vals.append(value)
            if i != j:
                rows.append(j)
                cols.append(i)
                vals.append(value)
    return rows, cols, vals


def _assemble_grouped(space: DeterminantSpace, integrals: IntegralSet):
    """Group determinants by alpha string so only excitation-connected pairs
    are visited: beta excitations inside an alpha group, then alpha-single and
    alpha-double group pairs with the matching beta constraint."""
    dets = space.dets
    groups: dict[int, list[int]] = {}
    for k, det in enumerate(dets):
        groups.setdefault(det.alpha, []).append(k)
    alphas = sorted(groups)

    rows, cols, vals = [], [], []

    def emit(i, j, value):
        if value == 0.0 and i != j:
            return
        rows.append(i)
        cols.append(j)
        vals.append(value)
        if i != j:
            rows.append(j)
            cols.append(i)
            vals.append(value)

    for alpha in alphas:
        members = groups[alpha]
        for a_pos, i in enumerate(members):
            for j in members[: a_pos + 1]:
                if (dets[i].beta ^ dets[j].beta).bit_count() > 4:
                    continue
                emit(i, j, slater_condon(dets[i], dets[j], integrals))

    for a_pos, alpha_i in enumerate(alphas):
        for alpha_j in alphas[:a_pos]:
            diff = (alpha_i ^ alpha_j).bit_count()
            if diff > 4:
                continue
            max_beta_diff = 4 - diff
            for i in groups[alpha_i]:
                for j in groups[alpha_j]:
                    if (dets[i].beta ^ dets[j].beta).bit_count() > max_beta_diff:
                        continue
                    emit(i, j, slater_condon(dets[i], dets[j], integrals))
    return rows, cols, vals


def build_heff(
    space: DeterminantSpace, integrals: IntegralSet, strategy: str = "auto"
) -> EffectiveHamiltonian:
    """Assemble every nonzero <i|H|j> of the projected Hamiltonian.

    ``strategy`` is "naive" (all pairs), "grouped" (alpha-string blocking), or
    "auto" which switches to grouping above NAIVE_ASSEMBLY_LIMIT determinants.
    Each unordered pair is evaluated once, so the matrix is exactly symmetric.
    """
    if strategy == "auto":
        strategy = "naive" if len(space) <= NAIVE_ASSEMBLY_LIMIT else "grouped"
    if strategy == "naive":
        rows, cols, vals = _assemble_naive(space, integrals)
    elif strategy == "grouped":
        rows, cols, vals = _assemble_grouped(space, integrals)
    else:
        raise ValueError(f"unknown assembly strategy {strategy!r}")
    dim = len(space)
    matrix = scipy.sparse.csr_matrix(
        scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim))
    )
    return EffectiveHamiltonian(matrix=matrix, space=space)


def solve_ground(heff: EffectiveHamiltonian, tol: float = 1e-8) -> CiSolution:
    """Lowest eigenpair; dense below DENSE_SOLVE_LIMIT, Davidson above.

    The eigenvector sign is fixed so the largest-magnitude coefficient is
    positive, making downstream sampling distributions reproducible.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    dim = heff.dimension
    matrix = heff.matrix
    if dim <= DENSE_SOLVE_LIMIT:
        evals, evecs = np.linalg.eigh(matrix.toarray())
        energy, vec = float(evals[0]), evecs[:, 0]
    else:
        energy, vec, _ = davidson_ground(
            lambda x: matrix @ x, heff.diagonal(), tol=tol
        )
    residual = float(np.linalg.norm(matrix @ vec - energy * vec))
    if residual > max(tol, 1e-7 * max(1.0, abs(energy))):
        raise RuntimeError(f"eigenpair residual {residual:.3e} exceeds tolerance {tol:g}")
    if vec[int(np.argmax(np.abs(vec)))] < 0:
        vec = -vec
    vec = vec / np.linalg.norm(vec)
    return CiSolution(energy=energy, coefficients=vec.copy(), space=heff.space, residual_norm=residual)


def solve_space(
    space: DeterminantSpace, integrals: IntegralSet, tol: float = 1e-8
) -> CiSolution:
    """Convenience wrapper: assemble and solve in one call."""
    return solve_ground(build_heff(space, integrals), tol=tol)


def full_sector_space(integrals: IntegralSet) -> DeterminantSpace:
    """Every determinant of the (n_alpha, n_beta) sector."""
    n = integrals.n_orbitals
    alphas = sorted(
        sum(1 << k for k in combo)
        for combo in itertools.combinations(range(n), integrals.n_alpha)
    )
    betas = sorted(
        sum(1 << k for k in combo)
        for combo in itertools.combinations(range(n), integrals.n_beta)
    )
    dets = [Determinant(a, b) for a in alphas for b in betas]
    return DeterminantSpace.from_determinants(dets, n)


def sector_dimension(integrals: IntegralSet) -> int:
    return math.comb(integrals.n_orbitals, integrals.n_alpha) * math.comb(
        integrals.n_orbitals, integrals.n_beta
    )


def fci_oracle(integrals: IntegralSet, max_dimension: int = FCI_DIMENSION_CAP) -> float:
    """Exact sector ground energy by enumerating every determinant.

    Refuses when the sector dimension exceeds ``max_dimension``.
    """
    dim = sector_dimension(integrals)
    if dim > max_dimension:
        raise ValueError(
            f"sector dimension {dim} exceeds the cap {max_dimension}; refusing"
        )
    return solve_space(full_sector_space(integrals), integrals).energy
