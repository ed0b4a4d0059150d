"""Determinant subspace construction: Cartesian products of spin-string
pools and importance-scored (heat-bath style) enlargement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

import numpy as np

from .determinants import (
    Determinant,
    SpinString,
    connected_determinants,
    format_determinant,
    parse_determinant,
    slater_condon,
)
from .integrals import IntegralSet

if TYPE_CHECKING:  # pragma: no cover
    from .qsci import CiSolution

__all__ = [
    "DeterminantSpace",
    "SelectionConfig",
    "cartesian_product",
    "heatbath_enlarge",
    "iterate_selection",
]


@dataclass(frozen=True)
class DeterminantSpace:
    """Ordered, deduplicated determinant list over one particle-number sector.

    The canonical order is ascending (alpha, beta); list position defines the
    coefficient index used by CI solutions and selection scores.
    """

    n_orbitals: int
    n_alpha: int
    n_beta: int
    dets: tuple[Determinant, ...]
    _index: dict = field(default=None, repr=False, compare=False)

    @classmethod
    def from_determinants(cls, dets: Iterable[Determinant], n_orbitals: int) -> "DeterminantSpace":
        unique = sorted(set(dets))
        if not unique:
            raise ValueError("a determinant space cannot be empty")
        n_alpha = unique[0].alpha.bit_count()
        n_beta = unique[0].beta.bit_count()
        limit = 1 << n_orbitals
        for det in unique:
            if det.alpha.bit_count() != n_alpha or det.beta.bit_count() != n_beta:
                raise ValueError("determinants span more than one particle-number sector")
            if det.alpha >= limit or det.beta >= limit:
                raise ValueError(f"determinant uses orbitals beyond n_orbitals={n_orbitals}")
        return cls(n_orbitals, n_alpha, n_beta, tuple(unique))

    def __len__(self) -> int:
        return len(self.dets)

    def __iter__(self):
        return iter(self.dets)

    def __contains__(self, det: Determinant) -> bool:
        return det in self.index

    @property
    def index(self) -> dict:
        if self._index is None:
            object.__setattr__(self, "_index", {d: k for k, d in enumerate(self.dets)})
        return self._index

    def to_lines(self) -> list[str]:
        return [format_determinant(d, self.n_orbitals) for d in self.dets]

    @classmethod
    def from_lines(cls, lines: Iterable[str], n_orbitals: int) -> "DeterminantSpace":
        dets = [parse_determinant(line) for line in lines if line.strip()]
        return cls.from_determinants(dets, n_orbitals)

    def save(self, path) -> None:
        with open(path, "w") as out:
            out.write("\n".join(self.to_lines()) + "\n")

    @classmethod
    def load(cls, path, n_orbitals: int) -> "DeterminantSpace":
        with open(path) as handle:
            return cls.from_lines(handle, n_orbitals)


@dataclass(frozen=True)
class SelectionConfig:
    """Pool size, importance cutoff, and enlargement round budget."""

    pool_size: int | None = None  # None keeps every distinct sampled string
    epsilon: float = 0.0
    max_enlargement_rounds: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.max_enlargement_rounds < 0:
            raise ValueError("max_enlargement_rounds must be non-negative")
        if self.pool_size is not None and self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")


def _check_uniform_popcount(pool: Sequence[SpinString], label: str) -> None:
    counts = {s.bit_count() for s in pool}
    if len(counts) > 1:
        raise ValueError(f"{label} pool mixes particle numbers: {sorted(counts)}")


def cartesian_product(
    pool_alpha: Sequence[SpinString],
    pool_beta: Sequence[SpinString],
    n_orbitals: int,
) -> DeterminantSpace:
    """Every alpha string paired with every beta string, deduplicated and
    canonically ordered.  Duplicate-free pools of sizes Ra and Rb yield
    exactly Ra*Rb determinants."""
    if not pool_alpha or not pool_beta:
        raise ValueError("pools must be nonempty")
    _check_uniform_popcount(pool_alpha, "alpha")
    _check_uniform_popcount(pool_beta, "beta")
    dets = [Determinant(a, b) for a in pool_alpha for b in pool_beta]
    return DeterminantSpace.from_determinants(dets, n_orbitals)


def heatbath_enlarge(
    space: DeterminantSpace,
    solution: "CiSolution",
    integrals: IntegralSet,
    config: SelectionConfig,
) -> DeterminantSpace:
    """Admit every out-of-space determinant l connected to the current space
    whose importance score max_k |H_lk c_k| exceeds ``config.epsilon``.

    Candidates reachable from several parents are scored once with the max
    over parents; the particle-number sector is preserved by construction.
    """
    coeffs = np.asarray(solution.coefficients)
    if coeffs.shape != (len(space),):
        raise ValueError(
            f"solution has {coeffs.shape[0]} coefficients for a space of size {len(space)}"
        )
    scores: dict[Determinant, float] = {}
    members = space.index
    for parent, ck in zip(space.dets, coeffs):
        if ck == 0.0:
            continue  # a zero coefficient can never push a score above epsilon >= 0
        abs_ck = abs(float(ck))
        for candidate in connected_determinants(parent, space.n_orbitals):
            if candidate in members:
                continue
            element = slater_condon(candidate, parent, integrals)
            if element == 0.0:
                continue
            score = abs(element) * abs_ck
            prev = scores.get(candidate)
            if prev is None or score > prev:
                scores[candidate] = score
    admitted = [det for det, score in scores.items() if score > config.epsilon]
    if not admitted:
        return space
    return DeterminantSpace.from_determinants(
        list(space.dets) + admitted, space.n_orbitals
    )


def iterate_selection(
    space: DeterminantSpace,
    integrals: IntegralSet,
    config: SelectionConfig,
    solver: Callable[[DeterminantSpace], "CiSolution"],
) -> tuple[DeterminantSpace, "CiSolution"]:
    """Alternate solve -> enlarge until the space stops growing or the round
    budget is exhausted.  With max_enlargement_rounds=0 this just solves on
    the input space (the fixed-subspace variant)."""
    solution = solver(space)
    for _ in range(config.max_enlargement_rounds):
        enlarged = heatbath_enlarge(space, solution, integrals, config)
        if len(enlarged) == len(space):
            break
        space = enlarged
        solution = solver(space)
    return space, solution
