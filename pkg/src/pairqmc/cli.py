"""Command-line interface: subcommands for the individual stages (sample,
doci, qsci, afqmc, fci) and for the orchestrated pipeline and curve scans.

Configuration comes from a TOML document; every config key can be overridden
by a flag of the same dotted name (e.g. ``--sampler.shots 200000``).  The
``PAIRQMC_NUM_THREADS`` environment variable caps BLAS threading and must be
honored before numpy loads, which is why the heavy imports live inside the
command handlers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

THREAD_ENV_VAR = "PAIRQMC_NUM_THREADS"

# dotted config key -> (type, help)
CONFIG_KEYS = {
    "fcidump": (str, "FCIDUMP path"),
    "variant_space": (str, "fixed | enlarged"),
    "variant_method": (str, "qsci-only | qsci-afqmc"),
    "output": (str, "result JSON path"),
    "trace": (str, "per-block trace path"),
    "cholesky_threshold": (float, "factorization residual cutoff"),
    "sampler.source": (str, "'surrogate' or a count-file path"),
    "sampler.shots": (int, "total shot count"),
    "sampler.seed": (int, "sampler RNG seed"),
    "selection.pool_size": (int, "R; 0 keeps all distinct strings"),
    "selection.epsilon": (float, "importance-score cutoff (Hartree)"),
    "selection.max_enlargement_rounds": (int, "enlargement round budget"),
    "afqmc.dt": (float, "imaginary-time step (1/Hartree)"),
    "afqmc.steps_per_block": (int, "steps per measurement block"),
    "afqmc.n_blocks": (int, "number of blocks"),
    "afqmc.n_walkers": (int, "walker count"),
    "afqmc.seed": (int, "walker RNG master seed"),
    "afqmc.pop_control_period": (int, "steps between population control"),
    "afqmc.equilibration_blocks": (int, "blocks discarded before averaging"),
}


def _apply_thread_env() -> None:
    count = os.environ.get(THREAD_ENV_VAR)
    if count:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, count)


def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as handle:
        return tomllib.load(handle)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config document")
    for key, (kind, help_text) in CONFIG_KEYS.items():
        parser.add_argument(f"--{key}", dest=key, type=kind, default=None, help=help_text)


def _merged_config(args: argparse.Namespace) -> dict:
    data: dict = {}
    if getattr(args, "config", None):
        data = _load_toml(args.config)
    data.pop("curve", None)
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is None:
            continue
        section = data
        parts = key.split(".")
        for part in parts[:-1]:
            section = section.setdefault(part, {})
        section[parts[-1]] = value
    return data


def _emit(payload: dict, path: str | None = None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as out:
            out.write(text + "\n")
    print(text)


def _cmd_sample(args) -> int:
    from .doci import solve_doci
    from .integrals import load_fcidump
    from .pipeline import PipelineConfig
    from .sampler import (
        RNG_ALGORITHM,
        filter_particle_number,
        load_counts,
        save_counts,
        surrogate_sample,
        top_r,
    )

    config = PipelineConfig.from_dict(_merged_config(args))
    integrals = load_fcidump(config.fcidump)
    if config.sampler.source == "surrogate":
        records = surrogate_sample(solve_doci(integrals), config.sampler)
    else:
        records = load_counts(config.sampler.source, integrals.n_orbitals)
    filtered = filter_particle_number(records, integrals.n_alpha)
    pool = top_r(filtered.records, config.selection.pool_size or max(1, len(filtered.records)))
    if args.counts_out:
        save_counts(filtered.records, args.counts_out, integrals.n_orbitals)
    _emit(
        {
            "source": config.sampler.source,
            "shots": {
                "total": filtered.total_shots,
                "kept": filtered.kept_shots,
                "discarded": filtered.discarded_shots,
                "discard_fraction": filtered.discard_fraction,
            },
            "distinct_strings": len(filtered.records),
            "pool_size": len(pool),
            "rng": {"algorithm": RNG_ALGORITHM, "seed": config.sampler.seed},
            "counts_file": args.counts_out,
        }
    )
    return 0


def _cmd_doci(args) -> int:
    import numpy as np

    from .determinants import format_spin_string
    from .doci import solve_doci
    from .integrals import load_fcidump
    from .pipeline import PipelineConfig

    config = PipelineConfig.from_dict(_merged_config(args))
    integrals = load_fcidump(config.fcidump)
    solution = solve_doci(integrals)
    order = np.argsort(-np.abs(solution.amplitudes))[: args.top]
    _emit(
        {
            "energy": solution.energy,
            "dimension": len(solution.basis),
            "leading_amplitudes": [
                {
                    "pair_string": format_spin_string(solution.basis[i], integrals.n_orbitals),
                    "amplitude": float(solution.amplitudes[i]),
                }
                for i in order
            ],
        }
    )
    return 0


def _run_pipeline_record(data: dict):
    from .pipeline import PipelineConfig, PipelineError, run_pipeline

    config = PipelineConfig.from_dict(data)
    try:
        return run_pipeline(config), None
    except PipelineError as exc:
        return exc.record, exc


def _cmd_qsci(args) -> int:
    data = _merged_config(args)
    data["variant_method"] = "qsci-only"
    record, failure = _run_pipeline_record(data)
    payload = {
        "energy": record.energies.get("qsci"),
        "subspace_size": record.spaces.get("final"),
        "residual": record.qsci_residual,
        "space_checksum": record.space_checksum,
        "record": record.to_dict(),
    }
    _emit(payload)
    return 1 if failure else 0


def _cmd_afqmc(args) -> int:
    from .afqmc import run_afqmc
    from .integrals import cholesky_factorize, load_fcidump
    from .pipeline import PipelineConfig
    from .qsci import solve_space
    from .selection import DeterminantSpace
    from .trial import TrialWavefunction

    data = _merged_config(args)
    data["variant_method"] = "qsci-afqmc"
    if args.space:
        config = PipelineConfig.from_dict(data)
        integrals = load_fcidump(config.fcidump)
        space = DeterminantSpace.load(args.space, integrals.n_orbitals)
        solution = solve_space(space, integrals)
        chol = cholesky_factorize(integrals, config.cholesky_threshold)
        trial = TrialWavefunction.from_ci_solution(solution)
        result = run_afqmc(integrals, chol, trial, config.afqmc, trace_path=config.trace)
        _emit(
            {
                "trial_energy": solution.energy,
                "subspace_size": len(space),
                "mean_energy": result.mean_energy,
                "error_bar": result.error_bar,
                "blocks": len(result.trace),
                "equilibration_blocks": result.equilibration_blocks,
                "seed": result.seed,
                "rng": result.rng_algorithm,
                "trace": config.trace,
            },
            config.output,
        )
        return 0
    record, failure = _run_pipeline_record(data)
    _emit(record.to_dict())
    return 1 if failure else 0


def _cmd_pipeline(args) -> int:
    record, failure = _run_pipeline_record(_merged_config(args))
    _emit(record.to_dict())
    if failure:
        print(f"error: {failure}", file=sys.stderr)
        return 1
    return 0


def _cmd_curve(args) -> int:
    from .pipeline import PipelineConfig, run_curve

    if not args.config:
        print("error: curve requires --config with a [curve] section", file=sys.stderr)
        return 2
    raw = _load_toml(args.config)
    curve_section = raw.get("curve", {})
    points = [(float(g), str(path)) for g, path in curve_section.get("points", [])]
    if not points:
        print("error: [curve].points is empty", file=sys.stderr)
        return 2
    csv_path = args.csv or curve_section.get("csv")
    config = PipelineConfig.from_dict(_merged_config(args))
    records = run_curve(config, points, csv_path)
    _emit(
        {
            "points": [
                {
                    "geometry": rec.config.get("geometry"),
                    "status": rec.status,
                    "energies": rec.energies,
                }
                for rec in records
            ],
            "csv": csv_path,
        }
    )
    return 0 if all(rec.status == "ok" for rec in records) else 1


def _cmd_fci(args) -> int:
    from .integrals import load_fcidump
    from .pipeline import PipelineConfig
    from .qsci import fci_oracle, sector_dimension

    config = PipelineConfig.from_dict(_merged_config(args))
    integrals = load_fcidump(config.fcidump)
    _emit(
        {
            "energy": fci_oracle(integrals),
            "sector_dimension": sector_dimension(integrals),
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairqmc",
        description="pair-sampling selected CI with auxiliary-field QMC refinement",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="draw or ingest shot records")
    _add_config_flags(p_sample)
    p_sample.add_argument("--counts-out", help="write filtered records to this count file")
    p_sample.set_defaults(handler=_cmd_sample)

    p_doci = sub.add_parser("doci", help="exact pair-CI energy and leading amplitudes")
    _add_config_flags(p_doci)
    p_doci.add_argument("--top", type=int, default=8, help="amplitudes to print")
    p_doci.set_defaults(handler=_cmd_doci)

    p_qsci = sub.add_parser("qsci", help="subspace selection plus diagonalization")
    _add_config_flags(p_qsci)
    p_qsci.set_defaults(handler=_cmd_qsci)

    p_afqmc = sub.add_parser("afqmc", help="auxiliary-field refinement")
    _add_config_flags(p_afqmc)
    p_afqmc.add_argument("--space", help="determinant-space checkpoint to use as the trial")
    p_afqmc.set_defaults(handler=_cmd_afqmc)

    p_pipe = sub.add_parser("pipeline", help="full workflow from one config")
    _add_config_flags(p_pipe)
    p_pipe.set_defaults(handler=_cmd_pipeline)

    p_curve = sub.add_parser("curve", help="pipeline over a geometry scan")
    _add_config_flags(p_curve)
    p_curve.add_argument("--csv", help="combined curve table path")
    p_curve.set_defaults(handler=_cmd_curve)

    p_fci = sub.add_parser("fci", help="full-enumeration reference energy")
    _add_config_flags(p_fci)
    p_fci.set_defaults(handler=_cmd_fci)
    return parser


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except BrokenPipeError:  # pragma: no cover
        return 0


if __name__ == "__main__":
    raise SystemExit(main())
