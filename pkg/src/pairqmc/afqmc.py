"""Phaseless auxiliary-field quantum Monte Carlo with a CI trial state.

Imaginary-time propagation uses the symmetric one-body split with a
Hubbard-Stratonovich transformation of the factorized two-body term,
force-bias importance sampling, the hybrid weight update with cosine phase
projection, and comb population control.  Per-walker field streams are
spawned deterministically from the master seed, so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .integrals import CholeskyFactors, IntegralSet
from .trial import (
    SINGULAR_DET_CUTOFF,
    TrialWavefunction,
    Walker,
    local_energy,
    overlap_ratio,
)

__all__ = [
    "AfqmcConfig",
    "Propagator",
    "Walker",
    "WalkerEnsemble",
    "BlockRecord",
    "AfqmcResult",
    "EnsembleCollapseError",
    "build_propagator",
    "overlap_ratio",
    "local_energy",
    "phaseless_weight_factor",
    "propagate_block",
    "run_afqmc",
    "reblock",
    "ReblockResult",
]

TAYLOR_ORDER = 10  # terms kept when exponentiating the field-coupled one-body operator


class EnsembleCollapseError(RuntimeError):
    """Every walker weight reached zero (or weights became non-finite)."""


@dataclass(frozen=True)
class AfqmcConfig:
    """Run parameters for the auxiliary-field sampler.

    ``equilibration_blocks=None`` discards the first 10% of blocks.
    """

    dt: float = 0.005
    steps_per_block: int = 50
    n_blocks: int = 3000
    n_walkers: int = 400
    seed: int = 0
    pop_control_period: int = 10
    equilibration_blocks: int | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        for name in ("steps_per_block", "n_blocks", "n_walkers", "pop_control_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.equilibration_blocks is not None and self.equilibration_blocks < 0:
            raise ValueError("equilibration_blocks must be >= 0")

    def resolved_equilibration(self) -> int:
        if self.equilibration_blocks is not None:
            return self.equilibration_blocks
        return self.n_blocks // 10


@dataclass(frozen=True)
class Propagator:
    """Precomputed pieces of one imaginary-time step."""

    dt: float
    exp_half_h1: np.ndarray  # exp(-dt/2 * shifted one-body matrix)
    chol: np.ndarray  # (n_chol, N, N) field couplings
    mean_field: np.ndarray  # (n_chol,) trial expectations <v_g>
    constant: float  # core energy minus the mean-field quadratic shift


def build_propagator(
    integrals: IntegralSet,
    chol: CholeskyFactors,
    dt: float,
    trial: TrialWavefunction | None = None,
) -> Propagator:
    """Mean-field-subtracted one-body exponential and field couplings.

    The one-body matrix absorbs the exchange-style correction from normal
    ordering the factorized two-body term plus the mean-field shift taken
    over the trial one-body density (zero without a trial).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    vectors = chol.vectors
    h_shifted = integrals.h1 - 0.5 * np.einsum("gpr,grq->pq", vectors, vectors)
    if trial is not None and vectors.shape[0]:
        mean_field = np.einsum("gpq,pq->g", vectors, trial.one_rdm())
    else:
        mean_field = np.zeros(vectors.shape[0])
    h_shifted = h_shifted + np.einsum("g,gpq->pq", mean_field, vectors)
    exp_half = scipy.linalg.expm(-0.5 * dt * h_shifted)
    constant = integrals.core_energy - 0.5 * float(mean_field @ mean_field)
    return Propagator(
        dt=dt,
        exp_half_h1=exp_half,
        chol=vectors,
        mean_field=mean_field,
        constant=constant,
    )


@dataclass
class WalkerEnsemble:
    """Stacked walker states plus the RNG streams that drive them.

    Field streams are pinned to walker slots (not to surviving lineages), so
    a run is reproducible for a fixed seed and walker count regardless of
    how population control reshuffles states.
    """

    phi_alpha: np.ndarray  # (W, N, n_alpha) complex
    phi_beta: np.ndarray  # (W, N, n_beta) complex
    weights: np.ndarray  # (W,) float
    overlaps: np.ndarray  # (W,) complex
    field_generators: list = field(repr=False, default_factory=list)
    control_generator: np.random.Generator | None = field(repr=False, default=None)
    steps_taken: int = 0

    @property
    def n_walkers(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_trial(cls, trial: TrialWavefunction, config: AfqmcConfig) -> "WalkerEnsemble":
        """All walkers start in the trial's dominant determinant."""
        phi_a, phi_b = trial.dominant_slater_matrices()
        w = config.n_walkers
        phi_alpha = np.repeat(phi_a[None].astype(complex), w, axis=0)
        phi_beta = np.repeat(phi_b[None].astype(complex), w, axis=0)
        seeds = np.random.SeedSequence(config.seed).spawn(w + 1)
        ensemble = cls(
            phi_alpha=phi_alpha,
            phi_beta=phi_beta,
            weights=np.ones(w),
            overlaps=trial.overlaps(phi_alpha, phi_beta),
            field_generators=[np.random.Generator(np.random.PCG64(s)) for s in seeds[:w]],
            control_generator=np.random.Generator(np.random.PCG64(seeds[w])),
        )
        return ensemble

    def sample_fields(self, n_fields: int) -> np.ndarray:
        return np.stack(
            [gen.standard_normal(n_fields) for gen in self.field_generators], axis=0
        )

    def orthonormalize(self, trial: TrialWavefunction) -> None:
        """QR-restore linear independence; stored overlaps are refreshed, and
        weight updates stay consistent because they only ever use ratios."""
        self.phi_alpha, _ = np.linalg.qr(self.phi_alpha)
        self.phi_beta, _ = np.linalg.qr(self.phi_beta)
        self.overlaps = trial.overlaps(self.phi_alpha, self.phi_beta)

    def comb_population_control(self) -> None:
        """Systematic (comb) resampling at fixed population, preserving the
        total weight exactly."""
        total = float(self.weights.sum())
        if not np.isfinite(total) or total <= 0.0:
            raise EnsembleCollapseError(f"total walker weight {total!r}")
        n = self.n_walkers
        shift = self.control_generator.random()
        positions = (shift + np.arange(n)) / n * total
        cumulative = np.cumsum(self.weights)
        chosen = np.searchsorted(cumulative, positions, side="right")
        chosen = np.minimum(chosen, n - 1)
        self.phi_alpha = self.phi_alpha[chosen].copy()
        self.phi_beta = self.phi_beta[chosen].copy()
        self.overlaps = self.overlaps[chosen].copy()
        self.weights = np.full(n, total / n)


class BlockRecord(NamedTuple):
    """One line of the run trace."""

    block: int
    energy_numerator: float
    total_weight: float
    n_walkers: int

    @property
    def energy(self) -> float:
        return self.energy_numerator / self.total_weight

    def to_line(self) -> str:
        return f"{self.block} {self.energy_numerator!r} {self.total_weight!r} {self.n_walkers}"


def propagate_block(
    ensemble: WalkerEnsemble,
    propagator: Propagator,
    trial: TrialWavefunction,
    config: AfqmcConfig,
) -> WalkerEnsemble:
    """Advance the ensemble by one block of steps.

    Each step samples force-biased fields, applies the half/full/half split
    propagator, and updates weights with the hybrid importance function under
    the phaseless cosine projection.  Orthonormalization and comb population
    control run every ``pop_control_period`` steps.
    """
    dt = propagator.dt
    sqrt_dt = np.sqrt(dt)
    chol = propagator.chol
    n_fields = chol.shape[0]
    exp_h1 = propagator.exp_half_h1
    shift = propagator.constant - trial.energy

    for _ in range(config.steps_per_block):
        g_a, g_b, denom = trial.greens_functions(ensemble.phi_alpha, ensemble.phi_beta)
        old_overlap = denom

        if n_fields:
            v_local = trial.force_bias(g_a, g_b, chol)
            force_bias = -1j * sqrt_dt * (v_local - propagator.mean_field[None, :])
            fields = ensemble.sample_fields(n_fields)
            shifted = fields - force_bias
            vhs = 1j * sqrt_dt * np.einsum("wg,gpq->wpq", shifted, chol)
            phi_a = _apply_split_propagator(exp_h1, vhs, ensemble.phi_alpha)
            phi_b = _apply_split_propagator(exp_h1, vhs, ensemble.phi_beta)
            field_phase = np.exp(-1j * sqrt_dt * (shifted @ propagator.mean_field))
            gaussian = np.exp(
                np.einsum("wg,wg->w", fields, force_bias)
                - 0.5 * np.einsum("wg,wg->w", force_bias, force_bias)
            )
        else:
            phi_a = np.matmul(exp_h1, np.matmul(exp_h1, ensemble.phi_alpha))
            phi_b = np.matmul(exp_h1, np.matmul(exp_h1, ensemble.phi_beta))
            field_phase = np.ones(ensemble.n_walkers, dtype=complex)
            gaussian = np.ones(ensemble.n_walkers)

        new_overlap = trial.overlaps(phi_a, phi_b)
        dead = np.abs(old_overlap) < SINGULAR_DET_CUTOFF
        safe_old = np.where(dead, 1.0, old_overlap)
        ratio = new_overlap / safe_old * field_phase
        factor = phaseless_weight_factor(ratio, gaussian * np.exp(-dt * shift))

        ensemble.weights = np.where(dead, 0.0, ensemble.weights * factor)
        if not np.all(np.isfinite(ensemble.weights)):
            raise EnsembleCollapseError("non-finite walker weight during propagation")
        ensemble.phi_alpha = phi_a
        ensemble.phi_beta = phi_b
        ensemble.overlaps = new_overlap
        ensemble.steps_taken += 1

        if ensemble.steps_taken % config.pop_control_period == 0:
            ensemble.orthonormalize(trial)
            ensemble.comb_population_control()
    return ensemble


def phaseless_weight_factor(overlap_ratio, reweight) -> np.ndarray:
    """Hybrid phaseless update: |I| times max(0, cos dtheta), where dtheta is
    the phase change of the trial overlap (including the scalar field phase)
    and ``reweight`` carries the force-bias Gaussian and energy-shift factors.
    Any step whose overlap phase crosses pi/2 zeroes the weight."""
    magnitude = np.abs(overlap_ratio * reweight)
    projection = np.maximum(0.0, np.cos(np.angle(overlap_ratio)))
    return magnitude * projection


def _apply_split_propagator(exp_h1, vhs, phi):
    """exp(-dt/2 h) exp(VHS) exp(-dt/2 h) applied to (W, N, n) walkers; the
    field-coupled factor is expanded as a truncated series per walker."""
    phi = np.matmul(exp_h1, phi)
    term = phi
    for order in range(1, TAYLOR_ORDER + 1):
        term = np.matmul(vhs, term) / order
        phi = phi + term
    return np.matmul(exp_h1, phi)


def measure_block_energy(
    ensemble: WalkerEnsemble,
    trial: TrialWavefunction,
    integrals: IntegralSet,
    chol: CholeskyFactors,
) -> tuple[float, float]:
    """Weighted mixed-estimator numerator and total weight for one block."""
    alive = ensemble.weights > 0.0
    if not np.any(alive):
        raise EnsembleCollapseError("all walker weights are zero at measurement")
    energies = trial.local_energies(
        ensemble.phi_alpha[alive], ensemble.phi_beta[alive], integrals, chol
    )
    numerator = float(np.sum(ensemble.weights[alive] * energies.real))
    total_weight = float(np.sum(ensemble.weights[alive]))
    if not np.isfinite(numerator):
        raise EnsembleCollapseError("non-finite local energy at measurement")
    return numerator, total_weight


@dataclass(frozen=True)
class AfqmcResult:
    mean_energy: float
    error_bar: float
    trace: tuple[BlockRecord, ...]
    equilibration_blocks: int
    seed: int
    rng_algorithm: str = "numpy-PCG64"

    def block_energies(self) -> np.ndarray:
        return np.array([rec.energy for rec in self.trace])


def run_afqmc(
    integrals: IntegralSet,
    chol: CholeskyFactors,
    trial: TrialWavefunction,
    config: AfqmcConfig,
    trace_path=None,
) -> AfqmcResult:
    """Full propagation run: block loop, equilibration discard, reblocked
    error bar.  The per-block trace is returned and optionally written as
    "block numerator total_weight n_walkers" lines.

    On ensemble collapse or non-finite energies the partial trace up to the
    failure is attached to the raised exception as ``exc.trace``.
    """
    propagator = build_propagator(integrals, chol, config.dt, trial)
    ensemble = WalkerEnsemble.from_trial(trial, config)
    n_equil = config.resolved_equilibration()
    if config.n_blocks - n_equil < 1:
        raise ValueError(
            f"insufficient statistics: {config.n_blocks} blocks with "
            f"{n_equil} discarded for equilibration leaves none to average"
        )
    trace: list[BlockRecord] = []
    try:
        for block in range(config.n_blocks):
            propagate_block(ensemble, propagator, trial, config)
            numerator, total_weight = measure_block_energy(ensemble, trial, integrals, chol)
            trace.append(BlockRecord(block, numerator, total_weight, ensemble.n_walkers))
            # Rescale by a common factor so a constant energy offset between
            # the trial and the ground state cannot overflow long runs; a
            # global scale cancels in every ratio estimator.
            live_total = float(ensemble.weights.sum())
            if live_total > 0.0:
                ensemble.weights *= ensemble.n_walkers / live_total
    except EnsembleCollapseError as exc:
        exc.trace = tuple(trace)
        raise

    if trace_path is not None:
        with open(trace_path, "w") as out:
            for record in trace:
                out.write(record.to_line() + "\n")

    energies = np.array([rec.energy for rec in trace[n_equil:]])
    if energies.size >= 8:
        stats = reblock(energies)
        mean, stderr = stats.mean, stats.stderr
    else:
        mean = float(np.mean(energies))
        stderr = (
            float(np.std(energies, ddof=1) / np.sqrt(energies.size))
            if energies.size > 1
            else 0.0
        )
    return AfqmcResult(
        mean_energy=mean,
        error_bar=stderr,
        trace=tuple(trace),
        equilibration_blocks=n_equil,
        seed=config.seed,
    )


@dataclass(frozen=True)
class ReblockResult:
    mean: float
    stderr: float
    naive_stderr: float
    plateau_level: int
    stderr_by_level: tuple[float, ...]


def reblock(series) -> ReblockResult:
    """Standard error of a correlated series by successive pairwise blocking.

    The reported stderr is the plateau of the blocking curve (first level
    whose successor stops growing beyond its own sampling noise), floored at
    the naive i.i.d. estimate.  Requires at least 8 entries.
    """
    data = np.asarray(series, dtype=float)
    if data.ndim != 1 or data.size < 8:
        raise ValueError("reblocking needs a 1-d series of at least 8 block means")
    mean = float(np.mean(data))
    levels: list[float] = []
    sizes: list[int] = []
    current = data
    while current.size >= 8:
        levels.append(float(np.std(current, ddof=1) / np.sqrt(current.size)))
        sizes.append(current.size)
        half = current.size // 2
        current = 0.5 * (current[: 2 * half : 2] + current[1 : 2 * half : 2])

    naive = levels[0]
    plateau = len(levels) - 1
    for k in range(len(levels) - 1):
        n_next = sizes[k + 1]
        noise = 1.0 / np.sqrt(2.0 * (n_next - 1))
        if levels[k + 1] <= levels[k] * (1.0 + 2.0 * noise):
            plateau = k
            break
    stderr = max(levels[plateau], naive)
    return ReblockResult(
        mean=mean,
        stderr=stderr,
        naive_stderr=naive,
        plateau_level=plateau,
        stderr_by_level=tuple(levels),
    )
