"""Shot-record handling: count-file ingestion, particle-number filtering,
a seedable classical surrogate sampler, and top-R pool extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .determinants import PairString, format_spin_string, parse_spin_string
from .doci import DociSolution

__all__ = [
    "ShotRecord",
    "SamplerConfig",
    "FilterResult",
    "load_counts",
    "save_counts",
    "filter_particle_number",
    "surrogate_sample",
    "top_r",
    "RNG_ALGORITHM",
]

RNG_ALGORITHM = "numpy-PCG64"


class ShotRecord(NamedTuple):
    bitstring: PairString
    count: int


@dataclass(frozen=True)
class SamplerConfig:
    """Where shot records come from and how many to draw.

    ``source`` is either the literal string "surrogate" or a path to a count
    file of lines "BITSTRING COUNT" (orbital 0 leftmost).
    """

    shots: int = 100_000
    seed: int = 0
    source: str = "surrogate"

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


def load_counts(path, n_orbitals: int | None = None) -> list[ShotRecord]:
    """Parse a count file; duplicate bitstrings are merged by summing counts.

    Lines are "BITSTRING COUNT"; '#' starts a comment.  All bitstrings must
    share one length (``n_orbitals`` when given, else inferred from the first
    record).  Returns records sorted by ascending bitstring value.
    """
    merged: dict[int, int] = {}
    expected_len = n_orbitals
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 'BITSTRING COUNT'")
            text, count_text = tokens
            if expected_len is None:
                expected_len = len(text)
            if len(text) != expected_len:
                raise ValueError(
                    f"{path}: line {lineno}: bitstring length {len(text)} != {expected_len}"
                )
            try:
                bits = parse_spin_string(text)
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            try:
                count = int(count_text)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: count {count_text!r} is not an integer") from None
            if count <= 0:
                raise ValueError(f"{path}: line {lineno}: count must be positive, got {count}")
            merged[bits] = merged.get(bits, 0) + count
    return [ShotRecord(bits, merged[bits]) for bits in sorted(merged)]


def save_counts(records: Iterable[ShotRecord], path, n_orbitals: int) -> None:
    with open(path, "w") as out:
        for rec in records:
            out.write(f"{format_spin_string(rec.bitstring, n_orbitals)} {rec.count}\n")


@dataclass(frozen=True)
class FilterResult:
    """Particle-number-filtered records plus the discard statistics."""

    records: list[ShotRecord]
    total_shots: int
    kept_shots: int

    @property
    def discarded_shots(self) -> int:
        return self.total_shots - self.kept_shots

    @property
    def discard_fraction(self) -> float:
        if self.total_shots == 0:
            return 0.0
        return self.discarded_shots / self.total_shots


def filter_particle_number(records: Iterable[ShotRecord], n_pairs: int) -> FilterResult:
    """Keep only records whose bitstring has exactly ``n_pairs`` set bits."""
    records = list(records)
    total = sum(rec.count for rec in records)
    kept = [rec for rec in records if rec.bitstring.bit_count() == n_pairs]
    return FilterResult(
        records=kept,
        total_shots=total,
        kept_shots=sum(rec.count for rec in kept),
    )


def surrogate_sample(solution: DociSolution, config: SamplerConfig) -> list[ShotRecord]:
    """Multinomial draw from the exact pair-CI probability mass |c_i|^2.

    Deterministic for a fixed seed; the generator algorithm is recorded in
    ``RNG_ALGORITHM`` so runs can be reproduced.
    """
    probabilities = solution.probabilities()
    norm = float(probabilities.sum())
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"surrogate distribution is not normalized: sum p = {norm!r}")
    rng = np.random.default_rng(config.seed)
    counts = rng.multinomial(config.shots, probabilities / norm)
    records = [
        ShotRecord(bits, int(c)) for bits, c in zip(solution.basis, counts) if c > 0
    ]
    records.sort(key=lambda rec: rec.bitstring)
    return records


def top_r(records: Iterable[ShotRecord], r: int) -> list[PairString]:
    """The ``r`` most frequent bitstrings; count ties break by ascending
    numeric value.  Returns fewer when fewer distinct strings exist."""
    if r < 1:
        raise ValueError("r must be >= 1")
    ranked = sorted(records, key=lambda rec: (-rec.count, rec.bitstring))
    return [rec.bitstring for rec in ranked[:r]]
