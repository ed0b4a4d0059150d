"""Config-driven orchestration of the full workflow: sample (or ingest)
pair-string shots, build the Cartesian-product subspace, optionally enlarge
it, diagonalize, and optionally refine with the auxiliary-field sampler.
Emits machine-readable result records and curve tables."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .afqmc import AfqmcConfig, run_afqmc
from .doci import solve_doci
from .integrals import cholesky_factorize, load_fcidump
from .qsci import fci_oracle, sector_dimension, solve_space
from .sampler import (
    RNG_ALGORITHM,
    SamplerConfig,
    filter_particle_number,
    load_counts,
    surrogate_sample,
    top_r,
)
from .selection import DeterminantSpace, SelectionConfig, cartesian_product, iterate_selection
from .trial import TrialWavefunction

__all__ = [
    "PipelineConfig",
    "PipelineError",
    "ResultRecord",
    "run_pipeline",
    "run_curve",
    "write_curve_csv",
]

RESULT_SCHEMA_VERSION = 1
AUTO_FCI_DIMENSION_LIMIT = 10**5
DEFAULT_CHOLESKY_THRESHOLD = 1e-6

SPACE_VARIANTS = ("fixed", "enlarged")
METHOD_VARIANTS = ("qsci-only", "qsci-afqmc")


class PipelineError(RuntimeError):
    """A stage failed; carries the stage tag and the partial result record."""

    def __init__(self, stage: str, message: str, record: "ResultRecord | None" = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.record = record


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative description of one workflow run."""

    fcidump: str
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    afqmc: AfqmcConfig = field(default_factory=AfqmcConfig)
    variant_space: str = "fixed"
    variant_method: str = "qsci-only"
    output: str | None = None
    trace: str | None = None
    space_out: str | None = None
    cholesky_threshold: float = DEFAULT_CHOLESKY_THRESHOLD

    def __post_init__(self):
        if self.variant_space not in SPACE_VARIANTS:
            raise ValueError(f"variant_space must be one of {SPACE_VARIANTS}")
        if self.variant_method not in METHOD_VARIANTS:
            raise ValueError(f"variant_method must be one of {METHOD_VARIANTS}")
        if self.variant_space == "enlarged" and self.selection.max_enlargement_rounds < 1:
            raise ValueError(
                "the enlarged variant needs selection.max_enlargement_rounds >= 1 "
                "and an explicit selection.epsilon"
            )

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {
            "fcidump", "sampler", "selection", "afqmc",
            "variant_space", "variant_method", "output", "trace",
            "cholesky_threshold",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "fcidump" not in data:
            raise ValueError("config must name an fcidump path")
        sampler_data = dict(data.get("sampler", {}))
        selection_data = dict(data.get("selection", {}))
        afqmc_data = dict(data.get("afqmc", {}))
        if selection_data.get("pool_size") in (0, None):
            selection_data["pool_size"] = None
        return cls(
            fcidump=data["fcidump"],
            sampler=SamplerConfig(**sampler_data),
            selection=SelectionConfig(**selection_data),
            afqmc=AfqmcConfig(**afqmc_data),
            variant_space=data.get("variant_space", "fixed"),
            variant_method=data.get("variant_method", "qsci-only"),
            output=data.get("output"),
            trace=data.get("trace"),
            cholesky_threshold=data.get("cholesky_threshold", DEFAULT_CHOLESKY_THRESHOLD),
        )

    def to_dict(self) -> dict:
        return {
            "fcidump": self.fcidump,
            "variant_space": self.variant_space,
            "variant_method": self.variant_method,
            "output": self.output,
            "trace": self.trace,
            "cholesky_threshold": self.cholesky_threshold,
            "sampler": {
                "shots": self.sampler.shots,
                "seed": self.sampler.seed,
                "source": self.sampler.source,
            },
            "selection": {
                "pool_size": self.selection.pool_size,
                "epsilon": self.selection.epsilon,
                "max_enlargement_rounds": self.selection.max_enlargement_rounds,
            },
            "afqmc": {
                "dt": self.afqmc.dt,
                "steps_per_block": self.afqmc.steps_per_block,
                "n_blocks": self.afqmc.n_blocks,
                "n_walkers": self.afqmc.n_walkers,
                "seed": self.afqmc.seed,
                "pop_control_period": self.afqmc.pop_control_period,
                "equilibration_blocks": self.afqmc.equilibration_blocks,
            },
        }


@dataclass
class ResultRecord:
    """Everything one run reports, JSON-serializable via :meth:`to_dict`."""

    config: dict
    status: str = "ok"
    failed_stage: str | None = None
    error: str | None = None
    energies: dict = field(default_factory=dict)
    spaces: dict = field(default_factory=dict)
    shots: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    rng: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    qsci_residual: float | None = None
    space_checksum: str | None = None

    def to_dict(self) -> dict:
        return {
            "schema": RESULT_SCHEMA_VERSION,
            "version": __version__,
            "status": self.status,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "config": self.config,
            "energies": self.energies,
            "spaces": self.spaces,
            "shots": self.shots,
            "timing": self.timing,
            "rng": self.rng,
            "warnings": self.warnings,
            "qsci_residual": self.qsci_residual,
            "space_checksum": self.space_checksum,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def write(self, path) -> None:
        with open(path, "w") as out:
            out.write(self.to_json() + "\n")


def space_checksum(space: DeterminantSpace) -> str:
    digest = hashlib.sha256("\n".join(space.to_lines()).encode()).hexdigest()
    return digest[:16]


def run_pipeline(config: PipelineConfig) -> ResultRecord:
    """Execute every configured stage; raises :exc:`PipelineError` with the
    stage tag and the partial record on failure.  The record echoes the full
    resolved configuration, so a rerun from it reproduces the run."""
    record = ResultRecord(config=config.to_dict())
    record.rng = {
        "algorithm": RNG_ALGORITHM,
        "sampler_seed": config.sampler.seed,
        "afqmc_seed": config.afqmc.seed,
    }

    def fail(stage: str, exc: Exception) -> PipelineError:
        record.status = "failed"
        record.failed_stage = stage
        record.error = str(exc)
        if config.output:
            record.write(config.output)
        return PipelineError(stage, str(exc), record)

    started = time.perf_counter()
    try:
        integrals = load_fcidump(config.fcidump)
    except (OSError, ValueError) as exc:
        raise fail("integrals", exc) from exc
    record.timing["integrals"] = time.perf_counter() - started
    record.spaces["sector_dimension"] = sector_dimension(integrals)

    started = time.perf_counter()
    try:
        doci_solution = solve_doci(integrals)
    except ValueError as exc:
        raise fail("doci", exc) from exc
    record.energies["doci"] = doci_solution.energy
    record.timing["doci"] = time.perf_counter() - started

    started = time.perf_counter()
    try:
        if config.sampler.source == "surrogate":
            records = surrogate_sample(doci_solution, config.sampler)
        else:
            records = load_counts(config.sampler.source, integrals.n_orbitals)
        filtered = filter_particle_number(records, integrals.n_alpha)
    except (OSError, ValueError) as exc:
        raise fail("sample", exc) from exc
    record.shots = {
        "total": filtered.total_shots,
        "kept": filtered.kept_shots,
        "discarded": filtered.discarded_shots,
        "discard_fraction": filtered.discard_fraction,
    }
    record.timing["sample"] = time.perf_counter() - started

    started = time.perf_counter()
    try:
        if not filtered.records:
            raise ValueError("no shot records survive particle-number filtering")
        pool_size = config.selection.pool_size or len(filtered.records)
        pool = top_r(filtered.records, pool_size)
        space = cartesian_product(pool, pool, integrals.n_orbitals)
    except ValueError as exc:
        raise fail("select", exc) from exc
    record.spaces["pool_size"] = len(pool)
    record.spaces["cartesian"] = len(space)
    record.timing["select"] = time.perf_counter() - started

    started = time.perf_counter()
    try:
        if config.variant_space == "enlarged":
            space, solution = iterate_selection(
                space,
                integrals,
                config.selection,
                solver=lambda sp: solve_space(sp, integrals),
            )
        else:
            solution = solve_space(space, integrals)
    except (ValueError, RuntimeError) as exc:
        raise fail("qsci", exc) from exc
    record.energies["qsci"] = solution.energy
    record.spaces["final"] = len(space)
    record.qsci_residual = solution.residual_norm
    record.space_checksum = space_checksum(space)
    record.timing["qsci"] = time.perf_counter() - started

    if config.variant_method == "qsci-afqmc":
        started = time.perf_counter()
        try:
            chol = cholesky_factorize(integrals, config.cholesky_threshold)
            trial = TrialWavefunction.from_ci_solution(solution)
            trace_path = config.trace
            if trace_path is None and config.output:
                trace_path = str(config.output) + ".trace"
            result = run_afqmc(integrals, chol, trial, config.afqmc, trace_path=trace_path)
        except (ValueError, RuntimeError) as exc:
            raise fail("afqmc", exc) from exc
        record.energies["afqmc"] = result.mean_energy
        record.energies["afqmc_stderr"] = result.error_bar
        record.timing["afqmc"] = time.perf_counter() - started
        if result.mean_energy > solution.energy + 2.0 * result.error_bar + 1e-10:
            record.warnings.append(
                "afqmc mean lies above the subspace energy by more than 2 sigma"
            )
    else:
        record.energies["afqmc"] = None
        record.energies["afqmc_stderr"] = None

    started = time.perf_counter()
    if record.spaces["sector_dimension"] <= AUTO_FCI_DIMENSION_LIMIT:
        try:
            record.energies["fci"] = fci_oracle(integrals)
        except (ValueError, RuntimeError) as exc:
            raise fail("fci", exc) from exc
        record.timing["fci"] = time.perf_counter() - started
    else:
        record.energies["fci"] = None

    if config.output:
        record.write(config.output)
    return record


def run_curve(
    base_config: PipelineConfig,
    points: list[tuple[float, str]],
    csv_path=None,
) -> list[ResultRecord]:
    """Run the pipeline once per (geometry, fcidump) point.

    Point failures are recorded and the scan continues; the combined table
    (raw plus per-method relative energies) is written when ``csv_path`` is
    given."""
    records: list[ResultRecord] = []
    for geometry, fcidump in points:
        data = base_config.to_dict()
        data["fcidump"] = fcidump
        data["output"] = None
        data["trace"] = None
        point_config = PipelineConfig.from_dict(data)
        try:
            record = run_pipeline(point_config)
        except PipelineError as exc:
            record = exc.record
        record.config["geometry"] = geometry
        records.append(record)
    if csv_path is not None:
        write_curve_csv(records, csv_path)
    return records


CURVE_COLUMNS = ("doci", "qsci", "afqmc", "fci")


def write_curve_csv(records: list[ResultRecord], path) -> None:
    """Combined curve table: geometry, absolute stage energies, the afqmc
    error bar, and per-method energies relative to each column's minimum."""
    rows = []
    for record in records:
        row: dict[str, Any] = {"geometry": record.config.get("geometry")}
        for name in CURVE_COLUMNS:
            row[f"e_{name}"] = record.energies.get(name)
        row["sigma_afqmc"] = record.energies.get("afqmc_stderr")
        row["status"] = record.status
        rows.append(row)
    for name in CURVE_COLUMNS:
        values = [row[f"e_{name}"] for row in rows if row[f"e_{name}"] is not None]
        minimum = min(values) if values else None
        for row in rows:
            value = row[f"e_{name}"]
            row[f"rel_{name}"] = None if (value is None or minimum is None) else value - minimum
    fieldnames = (
        ["geometry"]
        + [f"e_{n}" for n in CURVE_COLUMNS]
        + ["sigma_afqmc"]
        + [f"rel_{n}" for n in CURVE_COLUMNS]
        + ["status"]
    )
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fieldnames})
